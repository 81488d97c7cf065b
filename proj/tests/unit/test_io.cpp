#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "equisym/checks.hpp"
#include "equisym/data.hpp"
#include "equisym/errors.hpp"
#include "equisym/image.hpp"
#include "equisym/io.hpp"

using namespace equisym;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir() {
  const auto dir = fs::temp_directory_path() / ("equisym_test_io_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  return dir;
}

std::vector<std::uint8_t> file_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_CASE("container layout and round trip") {
  Container c;
  c.text = "a=1\n";
  const float f[] = {1.5f, -2.0f};
  const double d[] = {3.25};
  const std::uint8_t u[] = {7, 8, 9, 10, 11, 12};
  const std::int32_t i[] = {-1};
  c.add(Array::make("f", {2}, f, 2));
  c.add(Array::make("d", {1, 1}, d, 1));
  c.add(Array::make("u", {2, 3}, u, 6));
  c.add(Array::make("i", {1}, i, 1));
  CHECK_THROWS_AS(c.add(Array::make("f", {2}, f, 2)), UsageError);
  CHECK_THROWS_AS(Array::make("bad", {3}, f, 2), UsageError);

  const auto bytes = serialize_container(c);
  REQUIRE(bytes.size() > 16);
  CHECK(std::string(bytes.begin(), bytes.begin() + 4) == "EQSY");
  CHECK(bytes[4] == kContainerVersion);
  CHECK(bytes[8] == 4);
  CHECK(std::string(bytes.begin() + 12, bytes.begin() + 16) == "a=1\n");
  CHECK(bytes[16] == 4);
  CHECK(bytes[20] == 1);
  CHECK(bytes[25] == static_cast<std::uint8_t>(DType::f32));

  const auto back = deserialize_container(bytes);
  CHECK(back == c);
  CHECK(back.get("u").values<std::uint8_t>() == std::vector<std::uint8_t>{7, 8, 9, 10, 11, 12});
  CHECK(back.get("d").values<double>() == std::vector<double>{3.25});
  CHECK_THROWS_AS(back.get("d").values<float>(), DataError);
  CHECK_THROWS_AS(back.get("missing"), DataError);

  auto bad = bytes;
  bad[0] = 'X';
  CHECK_THROWS_AS(deserialize_container(bad), DataError);
  auto truncated = bytes;
  truncated.pop_back();
  CHECK_THROWS_AS(deserialize_container(truncated), DataError);
  auto trailing = bytes;
  trailing.push_back(0);
  CHECK_THROWS_AS(deserialize_container(trailing), DataError);
  auto version = bytes;
  version[4] = 99;
  CHECK_THROWS_AS(deserialize_container(version), DataError);
  CHECK_THROWS_AS(read_container("/nonexistent/x.eqsy"), DataError);
}

TEST_CASE("checkpoint round trip is bit-identical") {
  const auto dir = scratch_dir();
  auto cfg = ModelConfig::desk();
  cfg.heads = Heads::rot;
  EquiSymModel<float> model(cfg, 17);
  std::mt19937_64 rng(3);
  for (auto& b : model.buffers()) b.value->setRandom();
  save_checkpoint((dir / "a.eqsy").string(), model);
  auto loaded = load_checkpoint<float>((dir / "a.eqsy").string());
  CHECK(loaded->config() == cfg);
  save_checkpoint((dir / "b.eqsy").string(), *loaded);
  CHECK(file_bytes(dir / "a.eqsy") == file_bytes(dir / "b.eqsy"));

  const auto image = random_field<float>(model.input_type(), 64, 64, rng);
  CHECK(model.forward(image).rot->y.data == loaded->forward(image).rot->y.data);

  auto c = read_container((dir / "a.eqsy").string());
  c.arrays.pop_back();
  CHECK_THROWS_AS(load_model_state(*loaded, c), DataError);
  auto extra = read_container((dir / "a.eqsy").string());
  const float x = 0.0f;
  extra.add(Array::make("param.unknown", {1, 1}, &x, 1));
  CHECK_THROWS_AS(load_model_state(*loaded, extra), DataError);
  fs::remove_all(dir);
}

TEST_CASE("labels and scores round trip through the container") {
  SyntheticSpec spec;
  const auto sample = generate_synthetic_sample(spec, 3);
  const auto labels = make_labels(sample.annotation, 8, FoldClassTable::standard());
  CHECK(labels_from_container(deserialize_container(serialize_container(labels_to_container(labels)))) == labels);

  SampleLabels ref_only = labels;
  ref_only.y_rot.clear();
  ref_only.s_rot.clear();
  const auto back = labels_from_container(labels_to_container(ref_only));
  CHECK(back == ref_only);
  CHECK(!back.has_rot());

  ScoreMaps s{2, 3, {0.1f, 0.2f, 0.3f, 0.4f, 0.5f, 0.6f}, {}};
  CHECK(scores_from_container(deserialize_container(serialize_container(scores_to_container(s)))) == s);
}

TEST_CASE("PNM images") {
  const auto dir = scratch_dir();
  Image rgb(5, 3, 3), gray(4, 2, 1);
  for (std::size_t i = 0; i < rgb.pixels.size(); ++i) rgb.pixels[i] = static_cast<std::uint8_t>(i * 7);
  for (std::size_t i = 0; i < gray.pixels.size(); ++i) gray.pixels[i] = static_cast<std::uint8_t>(255 - i);
  write_pnm((dir / "a.ppm").string(), rgb);
  write_pnm((dir / "b.pgm").string(), gray);
  CHECK(read_pnm((dir / "a.ppm").string()) == rgb);
  CHECK(read_pnm((dir / "b.pgm").string()) == gray);

  std::ofstream((dir / "c.ppm").string()) << "P3\n1 1\n255\n0 0 0\n";
  CHECK_THROWS_AS(read_pnm((dir / "c.ppm").string()), DataError);
  std::ofstream((dir / "d.ppm").string(), std::ios::binary) << "P6\n# comment\n2 2\n255\nabc";
  CHECK_THROWS_AS(read_pnm((dir / "d.ppm").string()), DataError);
  fs::remove_all(dir);
}

TEST_CASE("resizing and standardization") {
  CHECK(fit_size(834, 417, 417) == std::pair<int, int>{417, 209});
  CHECK(fit_size(64, 64, 64) == std::pair<int, int>{64, 64});
  CHECK(fit_size(100, 50, 200) == std::pair<int, int>{200, 100});

  Image img(4, 4, 1);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 4; ++x) img.at(x, y, 0) = static_cast<std::uint8_t>(40 * x);
  CHECK(resize_image(img, 4, 4) == img);
  const auto up = resize_image(img, 8, 8);
  CHECK(up.at(0, 0, 0) == 0);
  CHECK(up.at(7, 3, 0) == 120);
  CHECK(up.at(3, 2, 0) == 50);

  const std::vector<int> labels{1, 2, 3, 4};
  CHECK(resize_nearest(labels, 2, 2, 4, 4) == std::vector<int>{1, 1, 2, 2, 1, 1, 2, 2, 3, 3, 4, 4, 3, 3, 4, 4});
  const auto scores = resize_scores({0.0f, 1.0f}, 2, 1, 4, 1);
  CHECK(scores == std::vector<float>{0.0f, 0.25f, 0.75f, 1.0f});

  SyntheticSpec spec;
  const auto sample = generate_synthetic_sample(spec, 1);
  const auto f = image_to_field<double>(sample.image, DihedralGroup(4));
  CHECK(f.channels() == 3);
  for (int c = 0; c < 3; ++c) {
    CHECK(std::abs(f.data.row(c).mean()) <= 1e-12);
    CHECK(std::abs(f.data.row(c).array().square().mean() - 1.0) <= 1e-9);
  }

  const auto gray = scores_to_gray({0.0f, 0.5f, 1.0f, 2.0f}, 2, 2);
  CHECK(gray.pixels == std::vector<std::uint8_t>{0, 128, 255, 255});
  const auto over = overlay_scores(sample.image, std::vector<float>(64 * 64, 1.0f));
  CHECK(over.at(5, 5, 0) == 255);
  CHECK(over.at(5, 5, 1) == 0);
}
