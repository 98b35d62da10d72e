#include "agentbt/retrieval.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <stdexcept>

#include <json.hpp>

namespace agentbt {

void RetrievalConfig::validate() const {
    if (!(w_dense >= 0.0) || !(w_sparse >= 0.0)) {
        throw ConfigError("retrieval weights must be non-negative");
    }
    if (hybrid_top_k < 1 || rerank_top_k < 1 || news_top_k < 1) {
        throw ConfigError("retrieval top-k values must be >= 1");
    }
    if (!(dedup_cosine > 0.0 && dedup_cosine <= 1.0)) {
        throw ConfigError("retrieval.dedup_cosine must lie in (0,1]");
    }
    if (window_sentences < 1 || stride_sentences < 1 || stride_sentences > window_sentences) {
        throw ConfigError("retrieval chunking needs 1 <= stride_sentences <= window_sentences");
    }
}

double cosine(const DenseVector& a, const DenseVector& b) {
    if (a.size() != b.size()) throw ProviderError("dense vectors differ in dimension");
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

double sparse_dot(const SparseVector& a, const SparseVector& b) {
    double dot = 0.0;
    auto ia = a.entries.begin();
    auto ib = b.entries.begin();
    while (ia != a.entries.end() && ib != b.entries.end()) {
        if (ia->first < ib->first) {
            ++ia;
        } else if (ib->first < ia->first) {
            ++ib;
        } else {
            dot += ia->second * ib->second;
            ++ia;
            ++ib;
        }
    }
    return dot;
}

DenseVector HashingEmbeddingProvider::dense(std::string_view text) const {
    DenseVector v(kDenseDims, 0.0);
    for (const auto& tok : tokenize(text)) v[fnv1a64(tok) % kDenseDims] += 1.0;
    double norm = 0.0;
    for (double x : v) norm += x * x;
    if (norm > 0.0) {
        norm = std::sqrt(norm);
        for (double& x : v) x /= norm;
    }
    return v;
}

SparseVector HashingEmbeddingProvider::sparse(std::string_view text) const {
    const auto tokens = tokenize(text);
    std::map<std::uint32_t, double> counts;
    for (const auto& tok : tokens) {
        counts[static_cast<std::uint32_t>(fnv1a64(tok) % kSparseBuckets)] += 1.0;
    }
    SparseVector out;
    out.entries.reserve(counts.size());
    const double total = static_cast<double>(tokens.size());
    for (const auto& [id, c] : counts) out.entries.emplace_back(id, c / total);
    return out;
}

namespace {

bool contains_phrase(const std::vector<std::string>& tokens, const std::vector<std::string>& phrase) {
    if (phrase.empty() || phrase.size() > tokens.size()) return false;
    return std::search(tokens.begin(), tokens.end(), phrase.begin(), phrase.end()) != tokens.end();
}

}  // namespace

KeywordReranker::KeywordReranker()
    : KeywordReranker({"revenue", "earnings", "guidance", "margin", "eps", "net income",
                       "operating income", "cash flow", "outlook", "profit", "sales"}) {}

KeywordReranker::KeywordReranker(std::vector<std::string> triggers) {
    for (const auto& t : triggers) triggers_.push_back(tokenize(t));
}

double KeywordReranker::relevance(std::string_view, std::string_view passage) const {
    const auto tokens = tokenize(passage);
    for (const auto& t : triggers_) {
        if (contains_phrase(tokens, t)) return 1.0;
    }
    return 0.0;
}

KeywordTable default_keyword_table() {
    return {{"earnings", 0.35},   {"guidance", 0.35},      {"revenue", 0.25},
            {"lawsuit", 0.4},     {"litigation", 0.4},     {"merger", 0.4},
            {"acquisition", 0.4}, {"downgrade", 0.3},      {"upgrade", 0.3},
            {"recall", 0.3},      {"investigation", 0.3},  {"bankruptcy", 0.5},
            {"layoffs", 0.3},     {"buyback", 0.25},       {"dividend", 0.2},
            {"profit warning", 0.5}};
}

KeywordTable load_keyword_table(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open keyword table " + path.string());
    KeywordTable table;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        if (trim(line).empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw DataError(path.string() + ":" + std::to_string(line_no) + ": expected term = weight");
        }
        const std::string term = trim(std::string_view(line).substr(0, eq));
        const std::string value = trim(std::string_view(line).substr(eq + 1));
        try {
            std::size_t used = 0;
            const double weight = std::stod(value, &used);
            if (used != value.size() || weight < 0.0 || term.empty()) throw std::invalid_argument("");
            table.emplace_back(term, weight);
        } catch (const std::exception&) {
            throw DataError(path.string() + ":" + std::to_string(line_no) + ": bad weight '" + value + "'");
        }
    }
    return table;
}

double base_importance(const NewsItem& item, const KeywordTable& keywords) {
    const auto tokens = tokenize(item.title + "\n" + item.body);
    double hits = 0.0;
    for (const auto& [term, weight] : keywords) {
        if (contains_phrase(tokens, tokenize(term))) hits += weight;
    }
    const double keyword_score = std::min(1.0, hits);
    const double words = static_cast<double>(tokenize(item.body).size());
    const double length_score = std::min(1.0, words / 300.0);
    return std::clamp(0.7 * keyword_score + 0.3 * length_score, 0.0, 1.0);
}

double influence_score(double base, double prob) {
    if (!(base >= 0.0 && base <= 1.0) || !(prob >= 0.0 && prob <= 1.0)) {
        throw std::invalid_argument("influence_score: inputs must lie in [0,1]");
    }
    return 0.55 * base + 0.25 * prob + 0.20;
}

ScoredNews score_news(const NewsItem& item, const KeywordTable& keywords,
                      const RerankerProvider& reranker, std::string_view impact_query) {
    ScoredNews s{item, base_importance(item, keywords), 0.0, 0.0};
    s.prob = std::clamp(reranker.relevance(impact_query, item.title + "\n" + item.body), 0.0, 1.0);
    s.influence = influence_score(s.base, s.prob);
    return s;
}

std::vector<ScoredNews> dedupe(const std::vector<ScoredNews>& items,
                               const EmbeddingProvider& provider, const RetrievalConfig& cfg) {
    std::vector<ScoredNews> kept;
    std::vector<DenseVector> kept_vecs;
    for (const auto& item : items) {
        auto vec = provider.dense(item.item.title + "\n" + item.item.body);
        const bool duplicate = std::any_of(kept_vecs.begin(), kept_vecs.end(), [&](const auto& k) {
            return cosine(vec, k) >= cfg.dedup_cosine;
        });
        if (duplicate) continue;
        kept.push_back(item);
        kept_vecs.push_back(std::move(vec));
    }
    return kept;
}

std::vector<ScoredNews> dedupe_exact(const std::vector<ScoredNews>& items) {
    std::vector<ScoredNews> kept;
    for (const auto& item : items) {
        const bool duplicate = std::any_of(kept.begin(), kept.end(), [&](const ScoredNews& k) {
            return k.item.title == item.item.title && k.item.body == item.item.body;
        });
        if (!duplicate) kept.push_back(item);
    }
    return kept;
}

std::vector<std::string> split_sentences(std::string_view doc) {
    std::vector<std::string> sentences;
    std::string current;
    auto flush = [&] {
        auto s = trim(current);
        if (!s.empty()) sentences.push_back(std::move(s));
        current.clear();
    };
    for (std::size_t i = 0; i < doc.size(); ++i) {
        const char c = doc[i];
        const bool at_end = i + 1 == doc.size();
        if (c == '\n' && !at_end && doc[i + 1] == '\n') {
            flush();
            continue;
        }
        current.push_back(c == '\n' || c == '\r' || c == '\t' ? ' ' : c);
        if ((c == '.' || c == '!' || c == '?') &&
            (at_end || std::isspace(static_cast<unsigned char>(doc[i + 1])))) {
            flush();
        }
    }
    flush();
    return sentences;
}

std::vector<Chunk> chunk_report(std::string_view doc, const RetrievalConfig& cfg,
                                std::string_view doc_id) {
    const auto sentences = split_sentences(doc);
    if (sentences.empty()) throw DataError("cannot chunk an empty document");
    const std::size_t n = sentences.size();
    std::vector<Chunk> chunks;
    for (std::size_t start = 0;; start += cfg.stride_sentences) {
        const std::size_t end = std::min(start + cfg.window_sentences, n);
        Chunk c;
        c.doc_id = std::string(doc_id);
        c.ordinal = static_cast<int>(chunks.size());
        c.sentence_begin = start;
        c.sentence_end = end;
        for (std::size_t i = start; i < end; ++i) {
            if (i > start) c.text += ' ';
            c.text += sentences[i];
        }
        chunks.push_back(std::move(c));
        if (end == n) break;
    }
    return chunks;
}

EmbeddedText embed(const EmbeddingProvider& provider, std::string_view text) {
    return {provider.dense(text), provider.sparse(text)};
}

double hybrid_score(const EmbeddedText& query, const EmbeddedText& passage,
                    const RetrievalConfig& cfg) {
    return cfg.w_dense * cosine(query.dense, passage.dense) +
           cfg.w_sparse * sparse_dot(query.sparse, passage.sparse);
}

double hybrid_score(std::string_view query, const Chunk& chunk, const EmbeddingProvider& provider,
                    const RetrievalConfig& cfg) {
    return hybrid_score(embed(provider, query), embed(provider, chunk.text), cfg);
}

std::vector<ScoredChunk> retrieve_topk(std::string_view query, std::span<const Chunk> chunks,
                                       const EmbeddingProvider& provider,
                                       const RetrievalConfig& cfg) {
    if (chunks.empty()) throw DataError("retrieve_topk: no chunks to search");
    const auto q = embed(provider, query);
    std::vector<ScoredChunk> scored;
    scored.reserve(chunks.size());
    for (const auto& c : chunks) scored.push_back({c, hybrid_score(q, embed(provider, c.text), cfg), 0.0});
    std::stable_sort(scored.begin(), scored.end(), [](const ScoredChunk& a, const ScoredChunk& b) {
        if (a.hybrid != b.hybrid) return a.hybrid > b.hybrid;
        return a.chunk.ordinal < b.chunk.ordinal;
    });
    if (scored.size() > cfg.hybrid_top_k) scored.resize(cfg.hybrid_top_k);
    return scored;
}

RerankResult rerank(std::string_view query, std::vector<ScoredChunk> candidates,
                    const RerankerProvider& reranker, const RetrievalConfig& cfg) {
    RerankResult result;
    try {
        for (auto& c : candidates) c.relevance = std::clamp(reranker.relevance(query, c.chunk.text), 0.0, 1.0);
        std::stable_sort(candidates.begin(), candidates.end(),
                         [](const ScoredChunk& a, const ScoredChunk& b) {
                             if (a.relevance != b.relevance) return a.relevance > b.relevance;
                             if (a.hybrid != b.hybrid) return a.hybrid > b.hybrid;
                             return a.chunk.ordinal < b.chunk.ordinal;
                         });
    } catch (const std::exception& e) {
        // keep hybrid order, drop any partial relevance values
        for (auto& c : candidates) c.relevance = 0.0;
        std::stable_sort(candidates.begin(), candidates.end(),
                         [](const ScoredChunk& a, const ScoredChunk& b) {
                             if (a.hybrid != b.hybrid) return a.hybrid > b.hybrid;
                             return a.chunk.ordinal < b.chunk.ordinal;
                         });
        result.degraded = true;
        result.error = e.what();
    }
    if (candidates.size() > cfg.rerank_top_k) candidates.resize(cfg.rerank_top_k);
    result.passages = std::move(candidates);
    return result;
}

std::vector<NewsItem> load_news_jsonl(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open news file " + path.string());
    std::vector<NewsItem> items;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const std::string where = path.string() + ":" + std::to_string(line_no);
        try {
            const auto j = nlohmann::json::parse(line);
            NewsItem item;
            item.date = Date::parse(j.at("date").get<std::string>());
            item.title = j.at("title").get<std::string>();
            item.body = j.value("body", std::string{});
            if (trim(item.title).empty()) throw DataError("empty title");
            items.push_back(std::move(item));
        } catch (const std::exception& e) {
            throw DataError(where + ": " + e.what());
        }
    }
    std::stable_sort(items.begin(), items.end(),
                     [](const NewsItem& a, const NewsItem& b) { return a.date < b.date; });
    return items;
}

ReportLibrary ReportLibrary::load(const std::filesystem::path& dir) {
    const auto manifest = dir / "manifest.jsonl";
    std::ifstream in(manifest);
    if (!in) throw DataError("cannot open report manifest " + manifest.string());
    ReportLibrary lib;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        try {
            const auto j = nlohmann::json::parse(line);
            ReportEntry e;
            e.symbol = j.at("symbol").get<std::string>();
            e.period = j.at("period").get<std::string>();
            e.date = Date::parse(j.at("date").get<std::string>());
            e.path = dir / j.at("path").get<std::string>();
            lib.entries_.push_back(std::move(e));
        } catch (const std::exception& e) {
            throw DataError(manifest.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    std::stable_sort(lib.entries_.begin(), lib.entries_.end(),
                     [](const ReportEntry& a, const ReportEntry& b) { return a.date < b.date; });
    return lib;
}

std::optional<ReportEntry> ReportLibrary::latest_visible(std::string_view symbol, Date date) const {
    std::optional<ReportEntry> best;
    for (const auto& e : entries_) {
        if (e.symbol == symbol && e.date <= date) best = e;
    }
    return best;
}

std::string ReportLibrary::read_text(const ReportEntry& entry) {
    std::ifstream in(entry.path, std::ios::binary);
    if (!in) throw DataError("cannot open report " + entry.path.string());
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

}  // namespace agentbt
