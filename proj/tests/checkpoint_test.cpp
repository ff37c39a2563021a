#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "varade/checkpoint.hpp"
#include "varade/detector.hpp"

using namespace varade;

namespace {

Normalizer normalizer(Index c) {
  Vector<float> lo = Vector<float>::LinSpaced(c, -1.0f, 0.0f), hi = Vector<float>::LinSpaced(c, 1.0f, 3.5f);
  return {lo, hi};
}

std::string bytes_of(const Checkpoint& ckpt) {
  std::ostringstream out;
  write_checkpoint(out, ckpt);
  return out.str();
}

Checkpoint from_bytes(const std::string& bytes) {
  std::istringstream in(bytes);
  return read_checkpoint(in);
}

std::vector<Checkpoint> all_kinds() {
  VaradeConfig cfg{16, 3, 4};
  cfg.lambda = 0.25;
  std::vector<Checkpoint> out;
  out.push_back(VaradeCheckpoint{build<float>(cfg, 5), normalizer(3)});
  RowMatrix<float> pts = RowMatrix<float>::Random(40, 3);
  out.push_back(KnnCheckpoint{KnnIndex::fit(pts, 4), normalizer(3)});
  out.push_back(IForestCheckpoint{IsoForest::fit(pts, {7, 32, 0.2, 9}), normalizer(3)});
  return out;
}

std::string message_of(const std::string& bytes) {
  try {
    from_bytes(bytes);
  } catch (const FormatError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST(Checkpoint, RoundTripIsBitIdentical) {
  for (const auto& ckpt : all_kinds()) {
    const auto bytes = bytes_of(ckpt);
    const auto back = from_bytes(bytes);
    EXPECT_EQ(back.index(), ckpt.index());
    EXPECT_EQ(bytes_of(back), bytes);
    EXPECT_EQ(normalizer_of(back), normalizer_of(ckpt));
    EXPECT_EQ(channels_of(back), 3);
  }
}

TEST(Checkpoint, VaradeModelAndScoresSurvive) {
  const auto ckpt = all_kinds()[0];
  const auto back = from_bytes(bytes_of(ckpt));
  const auto& a = std::get<VaradeCheckpoint>(ckpt).model;
  const auto& b = std::get<VaradeCheckpoint>(back).model;
  EXPECT_TRUE(a == b);
  EXPECT_EQ(b.config.lambda, 0.25);

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<float> u(-1, 1);
  WindowBuffer wa(16, 3), wb(16, 3);
  for (int t = 0; t < 40; ++t) {
    const float s[] = {u(rng), u(rng), u(rng)};
    wa.push(s);
    wb.push(s);
    EXPECT_EQ(score(a, wa), score(b, wb));
  }
}

TEST(Checkpoint, BaselineScoresSurvive) {
  const auto kinds = all_kinds();
  const auto knn = from_bytes(bytes_of(kinds[1]));
  const auto forest = from_bytes(bytes_of(kinds[2]));
  const float q[] = {0.1f, -0.4f, 0.9f};
  EXPECT_EQ(std::get<KnnCheckpoint>(knn).index.score(q), std::get<KnnCheckpoint>(kinds[1]).index.score(q));
  EXPECT_EQ(std::get<IForestCheckpoint>(forest).forest.score(q),
            std::get<IForestCheckpoint>(kinds[2]).forest.score(q));
  EXPECT_EQ(std::get<IForestCheckpoint>(forest).forest.threshold(),
            std::get<IForestCheckpoint>(kinds[2]).forest.threshold());
}

TEST(Checkpoint, RejectsDamagedInput) {
  for (const auto& ckpt : all_kinds()) {
    const auto bytes = bytes_of(ckpt);
    for (std::size_t cut : {std::size_t{0}, std::size_t{3}, std::size_t{7}, bytes.size() / 2, bytes.size() - 1})
      EXPECT_THROW(from_bytes(bytes.substr(0, cut)), FormatError) << "cut " << cut;
    EXPECT_THROW(from_bytes(bytes + "x"), FormatError);
  }
  auto bytes = bytes_of(all_kinds()[0]);
  auto magic = bytes;
  magic[0] = 'Z';
  EXPECT_NE(message_of(magic).find("magic"), std::string::npos) << message_of(magic);
  auto version = bytes;
  version[4] = 9;
  EXPECT_NE(message_of(version).find("version"), std::string::npos) << message_of(version);
}

TEST(Checkpoint, FileRoundTrip) {
  const auto path = std::filesystem::temp_directory_path() / "varade_checkpoint_test.bin";
  const auto ckpt = all_kinds()[2];
  save_checkpoint(path, ckpt);
  EXPECT_EQ(bytes_of(load_checkpoint(path)), bytes_of(ckpt));
  std::filesystem::remove(path);
  EXPECT_THROW(load_checkpoint(path), std::exception);
}
