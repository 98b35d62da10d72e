#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "agentbt/retrieval.h"
#include "support/fixtures.h"

using namespace agentbt;

namespace {

std::string sentences(std::size_t n) {
    std::string doc;
    for (std::size_t i = 0; i < n; ++i) doc += "Sentence number " + std::to_string(i) + " is here. ";
    return doc;
}

ScoredNews news(const std::string& title, const std::string& body, double influence = 0.5) {
    return {{Date::parse("2023-03-01"), title, body}, 0.0, 0.0, influence};
}

class FixedReranker final : public RerankerProvider {
public:
    explicit FixedReranker(std::vector<std::pair<std::string, double>> scores) : scores_(std::move(scores)) {}
    double relevance(std::string_view, std::string_view passage) const override {
        for (const auto& [needle, s] : scores_) {
            if (passage.find(needle) != std::string_view::npos) return s;
        }
        return 0.0;
    }

private:
    std::vector<std::pair<std::string, double>> scores_;
};

class FailingReranker final : public RerankerProvider {
public:
    double relevance(std::string_view, std::string_view) const override {
        throw ProviderError("reranker offline");
    }
};

std::vector<ScoredChunk> candidates(const std::vector<double>& hybrid) {
    std::vector<ScoredChunk> out;
    for (std::size_t i = 0; i < hybrid.size(); ++i) {
        Chunk c;
        c.ordinal = static_cast<int>(i);
        c.text = "passage-" + std::to_string(i);
        out.push_back({c, hybrid[i], 0.0});
    }
    return out;
}

}  // namespace

TEST(Influence, GridAndBounds) {
    EXPECT_NEAR(influence_score(0.0, 0.0), 0.2, 1e-15);
    EXPECT_NEAR(influence_score(1.0, 1.0), 1.0, 1e-15);
    EXPECT_NEAR(influence_score(0.8, 0.6), 0.79, 1e-12);
    EXPECT_NEAR(influence_score(0.5, 0.0), 0.475, 1e-12);
    for (int i = 0; i <= 10; ++i) {
        for (int j = 0; j <= 10; ++j) {
            const double n = influence_score(i / 10.0, j / 10.0);
            EXPECT_GE(n, 0.2 - 1e-15);
            EXPECT_LE(n, 1.0 + 1e-15);
            if (i > 0) EXPECT_GT(n, influence_score((i - 1) / 10.0, j / 10.0));
            if (j > 0) EXPECT_GT(n, influence_score(i / 10.0, (j - 1) / 10.0));
        }
    }
    EXPECT_THROW(influence_score(1.1, 0.0), std::invalid_argument);
    EXPECT_THROW(influence_score(0.0, -0.1), std::invalid_argument);
}

TEST(BaseImportance, KeywordsAndLength) {
    const auto table = default_keyword_table();
    EXPECT_DOUBLE_EQ(base_importance({Date{}, "Weather today", ""}, table), 0.0);
    EXPECT_NEAR(base_importance({Date{}, "Earnings beat, guidance raised", ""}, table), 0.7 * 0.7, 1e-12);
    std::string long_body;
    for (int i = 0; i < 400; ++i) long_body += "word ";
    EXPECT_NEAR(base_importance({Date{}, "quiet", long_body}, table), 0.3, 1e-12);
    // keyword score saturates at one
    EXPECT_NEAR(base_importance({Date{}, "merger lawsuit bankruptcy earnings", long_body}, table), 1.0, 1e-12);
}

TEST(KeywordTableFile, ParsesAndRejects) {
    fixture::TempDir dir;
    fixture::write_text(dir / "k.ini", "# terms\nearnings = 0.5\nprofit warning=0.25  # phrase\n\n");
    const auto t = load_keyword_table(dir / "k.ini");
    ASSERT_EQ(t.size(), 2u);
    EXPECT_EQ(t[1].first, "profit warning");
    EXPECT_DOUBLE_EQ(t[1].second, 0.25);
    fixture::write_text(dir / "bad.ini", "earnings\n");
    EXPECT_THROW(load_keyword_table(dir / "bad.ini"), DataError);
}

TEST(Dedupe, DropsNearDuplicatesAndIsIdempotent) {
    HashingEmbeddingProvider emb;
    RetrievalConfig cfg;
    const std::vector<ScoredNews> items{
        news("Acme beats earnings", "Acme reported strong quarterly earnings and raised guidance."),
        news("Acme beats earnings", "Acme reported strong quarterly earnings and raised guidance."),
        news("Flood closes plant", "Heavy rain closed the northern plant for two days."),
    };
    const auto once = dedupe(items, emb, cfg);
    ASSERT_EQ(once.size(), 2u);
    EXPECT_EQ(once[0].item.title, "Acme beats earnings");
    EXPECT_EQ(once[1].item.title, "Flood closes plant");
    const auto twice = dedupe(once, emb, cfg);
    EXPECT_EQ(twice.size(), once.size());
    EXPECT_EQ(dedupe_exact(items).size(), 2u);
    EXPECT_TRUE(dedupe({}, emb, cfg).empty());
}

TEST(Chunking, WindowCounts) {
    RetrievalConfig cfg;
    EXPECT_EQ(chunk_report(sentences(7), cfg).size(), 2u);
    EXPECT_EQ(chunk_report(sentences(3), cfg).size(), 1u);
    EXPECT_EQ(chunk_report(sentences(9), cfg).size(), 3u);
    for (std::size_t n = 1; n <= 40; ++n) {
        const std::size_t expected = n <= 5 ? 1 : 1 + (n - 5 + 1) / 2;
        const auto chunks = chunk_report(sentences(n), cfg, "doc");
        ASSERT_EQ(chunks.size(), expected) << n;
        EXPECT_EQ(chunks.back().sentence_end, n);
        for (std::size_t i = 0; i < chunks.size(); ++i) {
            EXPECT_EQ(chunks[i].sentence_begin, 2 * i);
            EXPECT_EQ(chunks[i].ordinal, static_cast<int>(i));
            EXPECT_EQ(chunks[i].doc_id, "doc");
        }
    }
    EXPECT_THROW(chunk_report("   \n\n ", cfg), DataError);
}

TEST(Chunking, SentenceSplitting) {
    const auto s = split_sentences("Revenue rose 3.5 percent. Margins fell!\n\nOutlook unchanged");
    ASSERT_EQ(s.size(), 3u);
    EXPECT_EQ(s[0], "Revenue rose 3.5 percent.");
    EXPECT_EQ(s[2], "Outlook unchanged");
}

TEST(Hybrid, ScoreCombinesDenseAndSparse) {
    RetrievalConfig cfg;
    EmbeddedText q{{1.0, 0.0}, {{{1u, 0.5}, {2u, 0.5}}}};
    EmbeddedText p{{0.6, 0.8}, {{{2u, 1.0}}}};
    EXPECT_NEAR(hybrid_score(q, p, cfg), 1.0 * 0.6 + 0.8 * 0.5, 1e-12);
    cfg.w_sparse = 0.0;
    EXPECT_NEAR(hybrid_score(q, p, cfg), 0.6, 1e-12);
}

TEST(Hybrid, EmbeddingIsNormalizedAndDeterministic) {
    HashingEmbeddingProvider emb;
    const auto a = emb.dense("Net revenue increased on strong demand");
    EXPECT_EQ(a.size(), HashingEmbeddingProvider::kDenseDims);
    double norm = 0.0;
    for (double x : a) norm += x * x;
    EXPECT_NEAR(norm, 1.0, 1e-12);
    EXPECT_EQ(a, emb.dense("Net revenue increased on strong demand"));
    const auto sp = emb.sparse("alpha beta beta");
    EXPECT_TRUE(std::is_sorted(sp.entries.begin(), sp.entries.end()));
}

TEST(TopK, MatchesFullSortOracle) {
    HashingEmbeddingProvider emb;
    RetrievalConfig cfg;
    std::mt19937_64 rng(31);
    const std::vector<std::string> words{"revenue", "margin", "plant", "cash", "guidance", "risk",
                                         "debt", "growth", "china", "supply", "labor", "costs"};
    std::uniform_int_distribution<std::size_t> pick(0, words.size() - 1);
    for (int trial = 0; trial < 30; ++trial) {
        std::string doc;
        for (int s = 0; s < 40; ++s) {
            for (int w = 0; w < 6; ++w) doc += words[pick(rng)] + " ";
            doc += "end. ";
        }
        const auto chunks = chunk_report(doc, cfg);
        const std::string query = "revenue guidance growth";
        const auto top = retrieve_topk(query, chunks, emb, cfg);
        ASSERT_EQ(top.size(), std::min<std::size_t>(10, chunks.size()));

        std::vector<std::pair<double, int>> all;
        for (const auto& c : chunks) all.emplace_back(hybrid_score(query, c, emb, cfg), c.ordinal);
        std::sort(all.begin(), all.end(), [](auto a, auto b) {
            return a.first != b.first ? a.first > b.first : a.second < b.second;
        });
        for (std::size_t i = 0; i < top.size(); ++i) {
            EXPECT_EQ(top[i].chunk.ordinal, all[i].second);
            EXPECT_DOUBLE_EQ(top[i].hybrid, all[i].first);
        }
    }
    EXPECT_THROW(retrieve_topk("q", std::span<const Chunk>{}, emb, cfg), DataError);
}

TEST(Rerank, KeepsSixOrderedByRelevanceThenHybrid) {
    RetrievalConfig cfg;
    const auto cands = candidates({0.9, 0.8, 0.7, 0.6, 0.5, 0.4, 0.3, 0.2, 0.1, 0.05});
    FixedReranker r({{"passage-9", 0.9}, {"passage-3", 0.9}, {"passage-5", 0.4}});
    const auto out = rerank("q", cands, r, cfg);
    EXPECT_FALSE(out.degraded);
    ASSERT_EQ(out.passages.size(), 6u);
    // equal relevance falls back to the hybrid score
    EXPECT_EQ(out.passages[0].chunk.ordinal, 3);
    EXPECT_EQ(out.passages[1].chunk.ordinal, 9);
    EXPECT_EQ(out.passages[2].chunk.ordinal, 5);
    EXPECT_EQ(out.passages[3].chunk.ordinal, 0);
    EXPECT_EQ(out.passages[4].chunk.ordinal, 1);
    EXPECT_EQ(out.passages[5].chunk.ordinal, 2);
}

TEST(Rerank, FailureKeepsHybridOrder) {
    RetrievalConfig cfg;
    const auto out = rerank("q", candidates({0.2, 0.9, 0.5}), FailingReranker{}, cfg);
    EXPECT_TRUE(out.degraded);
    EXPECT_FALSE(out.error.empty());
    ASSERT_EQ(out.passages.size(), 3u);
    EXPECT_EQ(out.passages[0].chunk.ordinal, 1);
    EXPECT_EQ(out.passages[2].chunk.ordinal, 0);
}

TEST(Reports, ManifestVisibility) {
    fixture::TempDir dir;
    fixture::write_text(dir / "a.txt", "Revenue grew. Costs fell.");
    fixture::write_text(dir / "b.txt", "Revenue shrank.");
    fixture::write_text(dir / "manifest.jsonl",
                        "{\"symbol\":\"ACME\",\"period\":\"FY2022\",\"date\":\"2023-02-10\",\"path\":\"a.txt\"}\n"
                        "{\"symbol\":\"ACME\",\"period\":\"2023Q1\",\"date\":\"2023-05-05\",\"path\":\"b.txt\"}\n");
    const auto lib = ReportLibrary::load(dir.path());
    EXPECT_EQ(lib.entries().size(), 2u);
    EXPECT_FALSE(lib.latest_visible("ACME", Date::parse("2023-02-09")).has_value());
    EXPECT_EQ(lib.latest_visible("ACME", Date::parse("2023-02-10"))->period, "FY2022");
    EXPECT_EQ(lib.latest_visible("ACME", Date::parse("2023-06-01"))->period, "2023Q1");
    EXPECT_FALSE(lib.latest_visible("OTHER", Date::parse("2023-06-01")).has_value());
    EXPECT_EQ(ReportLibrary::read_text(*lib.latest_visible("ACME", Date::parse("2023-06-01"))), "Revenue shrank.");
}

TEST(News, JsonlLoading) {
    fixture::TempDir dir;
    fixture::write_text(dir / "n.jsonl",
                        "{\"date\":\"2023-03-02\",\"title\":\"B\",\"body\":\"x\"}\n\n"
                        "{\"date\":\"2023-03-01\",\"title\":\"A\",\"body\":\"y\"}\n");
    const auto items = load_news_jsonl(dir / "n.jsonl");
    ASSERT_EQ(items.size(), 2u);
    fixture::write_text(dir / "bad.jsonl", "{\"title\":\"no date\"}\n");
    EXPECT_THROW(load_news_jsonl(dir / "bad.jsonl"), DataError);
}
