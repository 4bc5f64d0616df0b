#include <gtest/gtest.h>

#include <cstring>
#include <filesystem>
#include <fstream>

#include "hubscope/corpus_store.hpp"
#include "hubscope/error.hpp"
#include "hubscope/geometry.hpp"
#include "hubscope/synth.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using namespace hubscope;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("hubscope_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

void write_raw(const fs::path& p, const std::vector<float>& payload, std::size_t n, std::size_t dim) {
  std::ofstream(p, std::ios::binary)
      .write(reinterpret_cast<const char*>(payload.data()),
             static_cast<std::streamsize>(payload.size() * sizeof(float)));
  std::ofstream(p.string() + ".json") << R"({"model_id":"m","lang":"En","n":)" << n << R"(,"dim":)" << dim
                                      << R"(,"dtype":"float32","layout":"row-major"})";
}

void write_text(const fs::path& p, const std::string& s) { std::ofstream(p, std::ios::binary) << s; }

}  // namespace

TEST(EmbeddingMatrix, RejectsNonFiniteAndZeroRows) {
  EXPECT_THROW(EmbeddingMatrix("m", "En", 2, 2, {1, 0, 0, 0}), ValidationError);
  EXPECT_THROW(EmbeddingMatrix("m", "En", 1, 2, {1, std::nan("")}), ValidationError);
  EXPECT_THROW(EmbeddingMatrix("m", "En", 2, 2, {1, 2, 3}), ValidationError);
  try {
    EmbeddingMatrix("m", "En", 3, 1, {1, 2, 0});
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find('2'), std::string::npos) << e.what();
  }
}

TEST(LoadEmbeddings, MinimalRawFile) {
  const auto dir = scratch("raw1");
  write_raw(dir / "one.f32", {1.0f}, 1, 1);
  const auto m = load_embeddings(dir / "one.f32", MatrixFormat::RawF32);
  EXPECT_EQ(m.n(), 1u);
  EXPECT_EQ(m.dim(), 1u);
  EXPECT_EQ(m.at(0, 0), 1.0);
  EXPECT_EQ(m.model_id(), "m");
}

TEST(LoadEmbeddings, HeaderPayloadMismatch) {
  const auto dir = scratch("raw2");
  write_raw(dir / "bad.f32", {1, 2, 3, 4, 5}, 2, 3);
  EXPECT_THROW(load_embeddings(dir / "bad.f32", MatrixFormat::RawF32), ValidationError);
}

TEST(LoadEmbeddings, ZeroRowReportedWithIndex) {
  const auto dir = scratch("raw3");
  write_raw(dir / "z.f32", {1, 1, 0, 0}, 2, 2);
  try {
    load_embeddings(dir / "z.f32", MatrixFormat::RawF32);
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("row 1"), std::string::npos) << e.what();
  }
}

TEST(LoadEmbeddings, RoundTripBothFormats) {
  const auto dir = scratch("roundtrip");
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    SynthConfig c;
    c.n = 3;
    c.dim = 4;
    c.hub_count = 1;
    c.seed = seed;
    c.float32 = true;
    const auto ds = generate_parallel(c);
    for (auto fmt : {MatrixFormat::Csv, MatrixFormat::RawF32}) {
      const fs::path p = dir / (std::to_string(seed) + (fmt == MatrixFormat::Csv ? ".csv" : ".f32"));
      save_embeddings(ds.tgt(), p, fmt);
      const auto back = load_embeddings(p, fmt, MatrixLabels{ds.tgt().model_id(), ds.tgt().lang()});
      ASSERT_EQ(back.n(), 3u);
      EXPECT_EQ(std::memcmp(back.data().data(), ds.tgt().data().data(), 12 * sizeof(double)), 0);
      EXPECT_EQ(back, ds.tgt());
    }
  }
}

TEST(LoadEmbeddings, CsvRoundTripIsExactForArbitraryDoubles) {
  const auto dir = scratch("csvexact");
  const auto m = oracle::to_embedding(oracle::gaussian(7, 5, 11), "m", "xx");
  save_embeddings(m, dir / "xx.csv", MatrixFormat::Csv);
  EXPECT_EQ(load_embeddings(dir / "xx.csv", MatrixFormat::Csv, MatrixLabels{"m", "xx"}), m);
}

TEST(Align, ShapesAndModels) {
  const auto a = oracle::to_embedding(oracle::gaussian(5, 8, 1), "m", "En");
  const auto b = oracle::to_embedding(oracle::gaussian(5, 8, 2), "m", "Bn");
  EXPECT_EQ(align(a, b, "En-Bn").n(), 5u);
  EXPECT_THROW(align(a, oracle::to_embedding(oracle::gaussian(6, 8, 3), "m", "Bn"), "En-Bn"), ValidationError);
  EXPECT_THROW(align(a, oracle::to_embedding(oracle::gaussian(5, 8, 3), "other", "Bn"), "En-Bn"),
               ValidationError);
}

TEST(Align, SharesMatricesWithoutCopy) {
  auto a = std::make_shared<const EmbeddingMatrix>(oracle::to_embedding(oracle::gaussian(4, 3, 1), "m", "En"));
  auto b = std::make_shared<const EmbeddingMatrix>(oracle::to_embedding(oracle::gaussian(4, 3, 2), "m", "Bn"));
  const auto ds = align(a, b, "En-Bn");
  EXPECT_EQ(&ds.src(), a.get());
  EXPECT_EQ(&ds.tgt(), b.get());
}

TEST(Align, PipelineMatchesDirectReciprocity) {
  SynthConfig c;
  c.n = 200;
  c.dim = 32;
  c.noise = 1.0;
  c.seed = 4;
  const auto ds = generate_parallel(c);
  const auto re = align(ds.src(), ds.tgt(), "En-Bn");
  const auto fwd = cosine_matrix(re.src(), re.tgt());
  const auto a = oracle::from_scores(cosine_matrix(ds.src(), ds.tgt()));
  EXPECT_DOUBLE_EQ(reciprocity(fwd, fwd.transposed()), oracle::mutual_nn(a, oracle::transpose(a)));
}

TEST(ByteRatio, Examples) {
  const std::vector<std::string> same{"abc", "de"};
  EXPECT_DOUBLE_EQ(byte_ratio(same, same), 1.0);
  const std::vector<std::string> s{"ab"}, t{"abcd"};
  EXPECT_DOUBLE_EQ(byte_ratio(s, t), 2.0);
  EXPECT_THROW(byte_ratio(std::vector<std::string>{}, std::vector<std::string>{}), ValidationError);
  EXPECT_THROW(byte_ratio(std::vector<std::string>{""}, std::vector<std::string>{"a"}), ValidationError);
}

TEST(ByteRatio, MixedScriptMatchesByteCounter) {
  // Latin, Devanagari, Bengali, Arabic; each code point counted by UTF-8 lead byte.
  const std::vector<std::string> src{"water", "house", "tree"};
  const std::vector<std::string> tgt{"\xE0\xA4\xAA\xE0\xA4\xBE\xE0\xA4\xA8\xE0\xA5\x80",
                                     "\xE0\xA6\x98\xE0\xA6\xB0", "\xD8\xB4\xD8\xAC\xD8\xB1\xD8\xA9"};
  auto bytes = [](const std::vector<std::string>& v) {
    double total = 0;
    for (const auto& s : v) {
      for (unsigned char ch : s) {
        const int len = ch < 0x80 ? 1 : ch >= 0xF0 ? 4 : ch >= 0xE0 ? 3 : ch >= 0xC0 ? 2 : 0;
        total += len;
      }
    }
    return total / static_cast<double>(v.size());
  };
  EXPECT_NEAR(byte_ratio(src, tgt), bytes(tgt) / bytes(src), 1e-15);
}

TEST(Fixture, ShippedRowsMatchPublishedValues) {
  const auto rows = load_fixture(default_fixture_path());
  ASSERT_EQ(rows.size(), 20u);
  const auto find = [&](const std::string& m, const std::string& p) {
    for (const auto& r : rows) {
      if (r.model == m && r.pair == p) return r;
    }
    ADD_FAILURE() << m << " " << p;
    return FixtureRow{};
  };
  const auto g = find("Gemini", "En-Bn");
  EXPECT_DOUBLE_EQ(g.R, 0.197);
  EXPECT_DOUBLE_EQ(g.H, 0.315);
  EXPECT_DOUBLE_EQ(g.A, 0.766);
  EXPECT_DOUBLE_EQ(g.D, 0.059);
  const auto q = find("Qwen", "Hi-Bn");
  EXPECT_DOUBLE_EQ(q.R, 0.268);
  EXPECT_DOUBLE_EQ(q.H, 0.208);
  EXPECT_FALSE(q.b.has_value());
}

TEST(Fixture, StableKeysAcrossLoads) {
  const auto a = load_fixture(default_fixture_path());
  const auto b = load_fixture(default_fixture_path());
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].model, b[i].model);
    EXPECT_EQ(a[i].pair, b[i].pair);
    EXPECT_EQ(a[i].R, b[i].R);
    EXPECT_EQ(a[i].H, b[i].H);
  }
}

TEST(Fixture, DuplicateKeyAndRowCount) {
  const auto dir = scratch("fixture");
  write_text(dir / "dup.csv",
             "model,pair,R,H,A,D,dim\nX,En-Bn,0.1,0.2,0.3,0.1,8\nX,En-Bn,0.1,0.2,0.3,0.1,8\n");
  EXPECT_THROW(load_fixture(dir / "dup.csv", {std::nullopt}), ValidationError);
  write_text(dir / "short.csv", "model,pair,R,H,A,D,dim\nX,En-Bn,0.1,0.2,0.3,0.1,8\n");
  EXPECT_THROW(load_fixture(dir / "short.csv"), ValidationError);
  EXPECT_EQ(load_fixture(dir / "short.csv", {std::nullopt}).size(), 1u);
}

TEST(FeatureTable, ItemRangeChecked) {
  const auto dir = scratch("features");
  write_text(dir / "f.csv", "item_id,token_len,concreteness,hypernym_depth,is_hub:A\n0,3,2.5,4,1\n5,4,1.5,3,0\n");
  const auto ft = load_feature_table(dir / "f.csv");
  EXPECT_EQ(ft.size(), 2u);
  EXPECT_EQ(ft.is_hub.at("A"), (std::vector<std::uint8_t>{1, 0}));
  EXPECT_NO_THROW(ft.check_items(6));
  EXPECT_THROW(ft.check_items(5), ValidationError);
  write_text(dir / "bad.csv", "item_id,token_len,concreteness,hypernym_depth\n0,inf,2.5,4\n");
  EXPECT_THROW(load_feature_table(dir / "bad.csv"), ValidationError);
}

TEST(Corpus, SaveLoadRoundTrip) {
  const auto dir = scratch("corpus");
  SynthCorpusConfig cfg;
  cfg.n = 50;
  const Corpus c = synth_corpus(cfg);
  save_corpus(c, dir, MatrixFormat::RawF32);
  const Corpus back = load_corpus(dir);
  ASSERT_EQ(back.models.size(), c.models.size());
  for (std::size_t m = 0; m < c.models.size(); ++m) {
    EXPECT_EQ(back.models[m].model, c.models[m].model);
    for (const auto& [lang, mat] : c.models[m].langs) EXPECT_EQ(*back.models[m].langs.at(lang), *mat);
  }
  EXPECT_EQ(back.texts, c.texts);
}

TEST(Corpus, EmptyDirectoryRejected) {
  EXPECT_THROW(load_corpus(scratch("empty")), ValidationError);
}
