#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "agentbt/common.h"

namespace agentbt {

struct NewsItem {
    Date date;
    std::string title;
    std::string body;
};

struct ScoredNews {
    NewsItem item;
    double base = 0.0;
    double prob = 0.0;
    double influence = 0.2;
};

/// A window of consecutive sentences; [sentence_begin, sentence_end) is 0-based.
struct Chunk {
    std::string doc_id;
    int ordinal = 0;
    std::string text;
    std::size_t sentence_begin = 0;
    std::size_t sentence_end = 0;
};

struct RetrievalConfig {
    double w_dense = 1.0;
    double w_sparse = 0.8;
    std::size_t hybrid_top_k = 10;
    std::size_t rerank_top_k = 6;
    double dedup_cosine = 0.92;
    std::size_t window_sentences = 5;
    std::size_t stride_sentences = 2;
    std::size_t news_top_k = 10;

    void validate() const;
};

using DenseVector = std::vector<double>;

/// Non-negative term weights keyed by hashed term id, sorted by id.
struct SparseVector {
    std::vector<std::pair<std::uint32_t, double>> entries;
};

double cosine(const DenseVector& a, const DenseVector& b);
double sparse_dot(const SparseVector& a, const SparseVector& b);

/// Dense vectors are L2-normalized and both outputs deterministic for fixed input.
/// Implementations must tolerate concurrent calls; failures throw ProviderError.
class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;
    virtual DenseVector dense(std::string_view text) const = 0;
    virtual SparseVector sparse(std::string_view text) const = 0;
};

/// Probability in [0,1] that `passage` answers `query`. Same threading and
/// failure contract as EmbeddingProvider.
class RerankerProvider {
public:
    virtual ~RerankerProvider() = default;
    virtual double relevance(std::string_view query, std::string_view passage) const = 0;
};

/// Feature-hashed bag of words: 64-dim dense counts, L2-normalized; sparse
/// relative term frequencies over a 2^20-bucket hashed vocabulary.
class HashingEmbeddingProvider final : public EmbeddingProvider {
public:
    static constexpr std::size_t kDenseDims = 64;
    static constexpr std::uint32_t kSparseBuckets = 1u << 20;

    DenseVector dense(std::string_view text) const override;
    SparseVector sparse(std::string_view text) const override;
};

/// 1 when the passage contains any trigger term, else 0.
class KeywordReranker final : public RerankerProvider {
public:
    KeywordReranker();
    explicit KeywordReranker(std::vector<std::string> triggers);
    double relevance(std::string_view query, std::string_view passage) const override;

private:
    std::vector<std::vector<std::string>> triggers_;
};

using KeywordTable = std::vector<std::pair<std::string, double>>;

/// Earnings/guidance/litigation/M&A terms shipped with the tool.
KeywordTable default_keyword_table();
/// `term = weight` lines; `#` starts a comment.
KeywordTable load_keyword_table(const std::filesystem::path& path);

/// clamp(0.7 * keyword score + 0.3 * min(1, body_words / 300), 0, 1), where the
/// keyword score sums the weights of distinct matched terms, capped at 1.
double base_importance(const NewsItem& item, const KeywordTable& keywords);

/// 0.55 * base + 0.25 * prob + 0.20; throws std::invalid_argument outside [0,1].
double influence_score(double base, double prob);

ScoredNews score_news(const NewsItem& item, const KeywordTable& keywords,
                      const RerankerProvider& reranker, std::string_view impact_query);

/// Greedy near-duplicate filter: keeps an item iff its dense cosine to every
/// kept item is below cfg.dedup_cosine. Input order is preserved.
std::vector<ScoredNews> dedupe(const std::vector<ScoredNews>& items,
                               const EmbeddingProvider& provider, const RetrievalConfig& cfg);
/// Drops byte-identical title+body repeats only.
std::vector<ScoredNews> dedupe_exact(const std::vector<ScoredNews>& items);

std::vector<std::string> split_sentences(std::string_view doc);

/// Sliding sentence windows; throws DataError on a document without sentences.
std::vector<Chunk> chunk_report(std::string_view doc, const RetrievalConfig& cfg,
                                std::string_view doc_id = {});

struct EmbeddedText {
    DenseVector dense;
    SparseVector sparse;
};

EmbeddedText embed(const EmbeddingProvider& provider, std::string_view text);

/// w_dense * cosine(dense) + w_sparse * dot(sparse).
double hybrid_score(const EmbeddedText& query, const EmbeddedText& passage,
                    const RetrievalConfig& cfg);
double hybrid_score(std::string_view query, const Chunk& chunk, const EmbeddingProvider& provider,
                    const RetrievalConfig& cfg);

struct ScoredChunk {
    Chunk chunk;
    double hybrid = 0.0;
    double relevance = 0.0;
};

/// Top hybrid_top_k chunks by score, ties by ordinal; throws DataError when empty.
std::vector<ScoredChunk> retrieve_topk(std::string_view query, std::span<const Chunk> chunks,
                                       const EmbeddingProvider& provider,
                                       const RetrievalConfig& cfg);

struct RerankResult {
    std::vector<ScoredChunk> passages;
    bool degraded = false;
    std::string error;
};

/// Orders by reranker relevance, ties by prior hybrid score, keeps rerank_top_k.
/// On reranker failure the hybrid order is kept and the result flagged degraded.
RerankResult rerank(std::string_view query, std::vector<ScoredChunk> candidates,
                    const RerankerProvider& reranker, const RetrievalConfig& cfg);

/// Line-delimited {date, title, body} records.
std::vector<NewsItem> load_news_jsonl(const std::filesystem::path& path);

struct ReportEntry {
    std::string symbol;
    std::string period;
    Date date;
    std::filesystem::path path;
};

/// A directory of plain-text filings indexed by `manifest.jsonl`
/// ({symbol, period, date, path} per line, paths relative to the directory).
class ReportLibrary {
public:
    ReportLibrary() = default;
    static ReportLibrary load(const std::filesystem::path& dir);

    std::span<const ReportEntry> entries() const { return entries_; }
    /// Most recent filing for `symbol` dated on or before `date`.
    std::optional<ReportEntry> latest_visible(std::string_view symbol, Date date) const;
    static std::string read_text(const ReportEntry& entry);

private:
    std::vector<ReportEntry> entries_;
};

}  // namespace agentbt
