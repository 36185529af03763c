#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <string>

#include <gtest/gtest.h>

#include "edm/dataset.hpp"
#include "edm/error.hpp"
#include "synthetic.hpp"

#ifdef EDM_HAVE_PNG
#include <png.h>
#endif

namespace edm {
namespace {

namespace fs = std::filesystem;
using testing::TempDir;
using namespace std::string_literals;

std::vector<std::uint8_t> bytes_of(const std::string& s) { return {s.begin(), s.end()}; }

ErrorKind ppm_error_kind(const std::string& text) {
  try {
    decode_ppm(bytes_of(text));
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error for " << text;
  return ErrorKind::state;
}

void write_bytes(const fs::path& p, const std::string& s) {
  std::ofstream f(p, std::ios::binary);
  f << s;
}

TEST(Ppm, MinimalRedPixel) {
  const Image img = decode_ppm(bytes_of(std::string("P6\n1 1\n255\n") + "\xff\x00\x00"s));
  EXPECT_EQ(img, Image(1, 1, {255, 0, 0}));
}

TEST(Ppm, CommentsBetweenFieldsAreIgnored) {
  const std::string payload = "\x01\x02\x03\x04\x05\x06"s;
  const Image plain = decode_ppm(bytes_of("P6\n2 1\n255\n" + payload));
  EXPECT_EQ(decode_ppm(bytes_of("P6\n# a comment\n2 1\n255\n" + payload)), plain);
  EXPECT_EQ(decode_ppm(bytes_of("P6 # after magic\n2 # mid\n 1\n# before maxval\n255\n" + payload)), plain);
  EXPECT_EQ(decode_ppm(bytes_of("P6\t2\r\n1 255 " + payload)), plain);
}

TEST(Ppm, PayloadStartsAfterSingleWhitespace) {
  // The byte after maxval's single separator is data even if it looks like whitespace.
  const Image img = decode_ppm(bytes_of("P6 1 1 255\n\n\x20\x30"s));
  EXPECT_EQ(img, Image(1, 1, {'\n', 0x20, 0x30}));
}

TEST(Ppm, ErrorsByKind) {
  EXPECT_EQ(ppm_error_kind("P3\n1 1\n255\n\x01\x02\x03"), ErrorKind::format);
  EXPECT_EQ(ppm_error_kind("P5\n1 1\n255\n\x01"), ErrorKind::format);
  EXPECT_EQ(ppm_error_kind(""), ErrorKind::format);
  EXPECT_EQ(ppm_error_kind("P6\n1 1\n65535\n\x01\x02\x03\x04\x05\x06"), ErrorKind::unsupported);
  EXPECT_EQ(ppm_error_kind("P6\n1 1\n15\n\x01\x02\x03"), ErrorKind::unsupported);
  EXPECT_EQ(ppm_error_kind("P6\n2 2\n255\n\x01\x02\x03"), ErrorKind::format);
  EXPECT_EQ(ppm_error_kind("P6\n2 2\n"), ErrorKind::format);
  EXPECT_EQ(ppm_error_kind("P6\n0 2\n255\n"), ErrorKind::format);
  EXPECT_EQ(ppm_error_kind("P6\nx 2\n255\n"), ErrorKind::format);
}

TEST(Ppm, EncodeDecodeRoundTrip) {
  Rng rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    Image img(1 + rng.below(17), 1 + rng.below(17));
    for (auto& v : img.pixels) v = static_cast<std::uint8_t>(rng.below(256));
    const auto bytes = encode_ppm(img);
    EXPECT_EQ(decode_ppm(bytes), img);
    EXPECT_EQ(encode_ppm(decode_ppm(bytes)), bytes);
  }
}

TEST(DecodeImage, PpmDispatchMatchesDecoder) {
  TempDir dir("decode");
  const std::string text = "P6\n# x\n2 1\n255\n\x09\x08\x07\x06\x05\x04"s;
  write_bytes(dir / "a.PPM", text);
  EXPECT_EQ(decode_image(dir / "a.PPM"), decode_ppm(bytes_of(text)));
}

TEST(DecodeImage, MissingFileNamesPath) {
  const fs::path p = "/nonexistent/dir/img.ppm";
  try {
    decode_image(p);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::data);
    EXPECT_NE(std::string(e.what()).find(p.string()), std::string::npos);
  }
}

TEST(DecodeImage, UnknownExtensionIsDataError) {
  TempDir dir("ext");
  write_bytes(dir / "a.bmp", "BM");
  try {
    decode_image(dir / "a.bmp");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::data);
  }
}

TEST(DecodeImage, CorruptPpmCarriesPath) {
  TempDir dir("corrupt");
  write_bytes(dir / "bad.ppm", "P6\n4 4\n255\n\x01");
  try {
    decode_image(dir / "bad.ppm");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::format);
    EXPECT_NE(std::string(e.what()).find("bad.ppm"), std::string::npos);
  }
}

#ifdef EDM_HAVE_PNG
TEST(DecodeImage, PngMatchesPpmTwin) {
  TempDir dir("png");
  const Image red(1, 1, {255, 0, 0});
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = 1;
  image.height = 1;
  image.format = PNG_FORMAT_RGB;
  ASSERT_TRUE(png_image_write_to_file(&image, (dir / "red.png").c_str(), 0, red.pixels.data(), 0, nullptr));
  write_ppm(dir / "red.ppm", red);
  EXPECT_EQ(decode_image(dir / "red.png"), decode_image(dir / "red.ppm"));
  EXPECT_EQ(decode_image(dir / "red.png"), red);

  write_bytes(dir / "junk.png", "not a png");
  EXPECT_THROW(decode_image(dir / "junk.png"), Error);
}
#endif

TEST(ScanDataset, FullCountTreeBinary) {
  TempDir dir("counts");
  testing::write_full_count_tree(dir.path());
  const auto scan = scan_dataset(dir.path(), Task::binary);
  EXPECT_EQ(scan.samples.size(), 1300u);
  EXPECT_EQ(class_counts(scan.samples, 2), (std::vector<std::size_t>{500, 800}));
  EXPECT_EQ(scan.labels.classes, (std::vector<std::string>{"normal", "fault"}));
}

TEST(ScanDataset, FullCountTreeMulti) {
  TempDir dir("counts");
  testing::write_full_count_tree(dir.path());
  const auto scan = scan_dataset(dir.path(), Task::multi);
  EXPECT_EQ(scan.samples.size(), 800u);
  EXPECT_EQ(class_counts(scan.samples, 4), (std::vector<std::size_t>{200, 200, 200, 200}));
  for (const auto& s : scan.samples) EXPECT_NE(s.origin_dir, "normal");
}

TEST(ScanDataset, SortedSkipsNonImagesAndIsPure) {
  TempDir dir("scan");
  fs::create_directories(dir / "normal");
  fs::create_directories(dir / "warping" / "nested");
  const Image px(1, 1, {1, 2, 3});
  write_ppm(dir / "normal" / "b.ppm", px);
  write_ppm(dir / "normal" / "a.ppm", px);
  write_ppm(dir / "warping" / "z.ppm", px);
  write_bytes(dir / "normal" / "notes.txt", "hi");
  const auto scan = scan_dataset(dir.path(), Task::binary);
  ASSERT_EQ(scan.samples.size(), 3u);
  EXPECT_EQ(scan.skipped, 2u);
  EXPECT_TRUE(std::is_sorted(scan.samples.begin(), scan.samples.end(),
                             [](const auto& a, const auto& b) { return a.path < b.path; }));
  EXPECT_EQ(scan.samples[0].path.filename(), "a.ppm");
  EXPECT_EQ(scan.samples[2].class_id, 1);
  EXPECT_EQ(scan.samples[2].origin_dir, "warping");
  EXPECT_EQ(scan_dataset(dir.path(), Task::binary).samples, scan.samples);
}

TEST(ScanDataset, MissingClassesAreListed) {
  TempDir dir("missing");
  try {
    scan_dataset(dir.path(), Task::binary);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::data);
    EXPECT_NE(std::string(e.what()).find("normal/"), std::string::npos);
  }
  fs::create_directories(dir / "strings");
  write_ppm(dir / "strings" / "s.ppm", Image(1, 1));
  try {
    scan_dataset(dir.path(), Task::multi);
    FAIL();
  } catch (const Error& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("layer_shift/"), std::string::npos);
    EXPECT_NE(msg.find("warping/"), std::string::npos);
    EXPECT_EQ(msg.find("strings/"), std::string::npos);
  }
  EXPECT_THROW(scan_dataset(dir / "does-not-exist", Task::binary), Error);
}

std::vector<LabeledSample> synthetic_samples(const std::vector<std::size_t>& per_class) {
  std::vector<LabeledSample> out;
  for (std::size_t c = 0; c < per_class.size(); ++c)
    for (std::size_t i = 0; i < per_class[c]; ++i)
      out.push_back({fs::path("c" + std::to_string(c)) / (std::to_string(i) + ".ppm"), static_cast<int>(c), "c"});
  return out;
}

TEST(StratifiedSplit, FloorArithmetic) {
  const auto one = synthetic_samples({10});
  const Split s1 = stratified_split(one, 0.8, 1);
  EXPECT_EQ(s1.train.size(), 8u);
  EXPECT_EQ(s1.test.size(), 2u);

  const auto two = synthetic_samples({500, 800});
  const Split s2 = stratified_split(two, 0.8, 1);
  EXPECT_EQ(class_counts(s2.train, 2), (std::vector<std::size_t>{400, 640}));
  EXPECT_EQ(class_counts(s2.test, 2), (std::vector<std::size_t>{100, 160}));
}

TEST(StratifiedSplit, ClampsToKeepBothSidesNonEmpty) {
  const auto few = synthetic_samples({2, 3});
  const Split lo = stratified_split(few, 0.1, 4);
  EXPECT_EQ(class_counts(lo.train, 2), (std::vector<std::size_t>{1, 1}));
  const Split hi = stratified_split(few, 0.99, 4);
  EXPECT_EQ(class_counts(hi.test, 2), (std::vector<std::size_t>{1, 1}));
}

TEST(StratifiedSplit, DeterministicDisjointExhaustive) {
  Rng gen(3);
  for (int trial = 0; trial < 30; ++trial) {
    const auto samples = synthetic_samples({2 + gen.below(30), 2 + gen.below(30), 2 + gen.below(30)});
    const double ratio = gen.uniform(0.05, 0.95);
    const std::uint64_t seed = gen.next_u64();
    const Split a = stratified_split(samples, ratio, seed);
    const Split b = stratified_split(samples, ratio, seed);
    ASSERT_EQ(a.train, b.train);
    ASSERT_EQ(a.test, b.test);
    std::set<fs::path> train, test;
    for (const auto& s : a.train) train.insert(s.path);
    for (const auto& s : a.test) test.insert(s.path);
    ASSERT_EQ(train.size() + test.size(), samples.size());
    for (const auto& p : train) ASSERT_EQ(test.count(p), 0u);
    const auto counts = class_counts(samples, 3);
    const auto train_counts = class_counts(a.train, 3);
    for (std::size_t c = 0; c < 3; ++c) {
      const auto want = std::clamp<std::size_t>(
          static_cast<std::size_t>(std::floor(ratio * static_cast<double>(counts[c]))), 1, counts[c] - 1);
      ASSERT_EQ(train_counts[c], want);
    }
  }
}

TEST(StratifiedSplit, RejectsTinyClassesAndBadRatios) {
  EXPECT_THROW(stratified_split(synthetic_samples({5, 1}), 0.8, 1), Error);
  EXPECT_THROW(stratified_split(synthetic_samples({5}), 0.0, 1), Error);
  EXPECT_THROW(stratified_split(synthetic_samples({5}), 1.0, 1), Error);
}

TEST(MakeBatches, SizesAndOrder) {
  std::vector<int> items(10);
  std::iota(items.begin(), items.end(), 0);
  const auto batches = make_batches(std::span<const int>(items), 4, 1, false);
  ASSERT_EQ(batches.size(), 3u);
  EXPECT_EQ(batches[0], (std::vector<int>{0, 1, 2, 3}));
  EXPECT_EQ(batches[2], (std::vector<int>{8, 9}));
}

TEST(MakeBatches, ShuffledIsDeterministicPartition) {
  std::vector<int> items(37);
  std::iota(items.begin(), items.end(), 0);
  const auto a = make_batches(std::span<const int>(items), 5, 99, true);
  const auto b = make_batches(std::span<const int>(items), 5, 99, true);
  EXPECT_EQ(a, b);
  std::vector<int> flat;
  for (const auto& batch : a) flat.insert(flat.end(), batch.begin(), batch.end());
  EXPECT_NE(flat, items);
  std::sort(flat.begin(), flat.end());
  EXPECT_EQ(flat, items);
}

}  // namespace
}  // namespace edm
