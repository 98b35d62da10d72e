#pragma once

#include <compare>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace agentbt {

/// Malformed or inconsistent input data (prices, news, reports, run files).
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Not enough closes at-or-before the evaluation date for the requested window.
class InsufficientHistory : public DataError {
public:
    using DataError::DataError;
};

/// Invalid configuration or command-line usage.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A chat, embedding, or reranker provider failed to produce a response.
class ProviderError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Calendar date stored as days since 1970-01-01.
class Date {
public:
    constexpr Date() = default;

    /// Parses `YYYY-MM-DD`; throws DataError on malformed or impossible dates.
    static Date parse(std::string_view iso);
    static Date from_ymd(int year, unsigned month, unsigned day);

    std::string iso() const;
    constexpr std::int32_t serial() const { return days_; }

    constexpr auto operator<=>(const Date&) const = default;

private:
    explicit constexpr Date(std::int32_t days) : days_(days) {}
    std::int32_t days_ = 0;
};

/// 64-bit FNV-1a; stable across platforms, used for feature hashing and digests.
std::uint64_t fnv1a64(std::string_view text);
std::string hex_digest(std::string_view text);

/// Lower-cased alphanumeric tokens.
std::vector<std::string> tokenize(std::string_view text);

/// Fixed-precision decimal rendering for prompts and notices.
std::string format_fixed(double value, int decimals);

std::string trim(std::string_view text);

}  // namespace agentbt
