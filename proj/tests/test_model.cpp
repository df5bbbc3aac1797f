#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "pjem/checkpoint.hpp"
#include "pjem/model.hpp"
#include "pjem/rng.hpp"

using namespace pjem;
namespace fs = std::filesystem;

namespace {

EncoderConfig small_encoder() {
  EncoderConfig cfg;
  cfg.widths = {8, 8, 16};
  return cfg;
}

SegmentLayout small_layout() {
  SegmentLayout layout;
  layout.segments = 3;
  layout.entries_per_segment = 4;
  return layout;
}

ProjectorConfig small_projector() {
  ProjectorConfig cfg;
  cfg.hidden = 8;
  return cfg;
}

ParameterStore small_store(std::uint64_t seed = 1) {
  return init_parameters(small_encoder(), small_layout(), small_projector(), seed);
}

bool stores_bit_equal(const ParameterStore& a, const ParameterStore& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.items().size(); ++i) {
    const auto& [na, va] = a.items()[i];
    const auto& [nb, vb] = b.items()[i];
    if (na != nb || !va.same_shape(vb)) return false;
    if (std::memcmp(va.data(), vb.data(), sizeof(double) * static_cast<std::size_t>(va.size())) != 0) return false;
  }
  return true;
}

PointCloud random_cloud(Rng& rng, int points) {
  PointCloud cloud;
  cloud.points.resize(points, 3);
  for (int i = 0; i < points; ++i) {
    for (int j = 0; j < 3; ++j) cloud.points(i, j) = rng.uniform(-1.0, 1.0);
  }
  return cloud;
}

}  // namespace

TEST_CASE("init_parameters is deterministic, biases zero, weights bounded") {
  ParameterStore a = small_store(42);
  ParameterStore b = small_store(42);
  CHECK(stores_bit_equal(a, b));
  ParameterStore c = small_store(43);
  CHECK(!stores_bit_equal(a, c));

  for (const auto& [name, value] : a.items()) {
    if (name.ends_with(".bias")) {
      CHECK(value.flat().cwiseAbs().maxCoeff() == 0.0);
    } else {
      double bound = std::sqrt(6.0 / static_cast<double>(value.rows() + value.cols()));
      CHECK(value.flat().cwiseAbs().maxCoeff() <= bound);
    }
  }
}

TEST_CASE("layout and projector configs validate") {
  SegmentLayout bad;
  bad.segments = 1;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad.segments = 4;
  bad.entries_per_segment = 1;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  ProjectorConfig proj;
  proj.depth = 0;
  CHECK_THROWS_AS(proj.validate(), std::invalid_argument);
}

TEST_CASE("encode is exactly invariant to point permutations") {
  Rng rng(5);
  ParameterStore store = small_store();
  PointCloud cloud = random_cloud(rng, 24);
  PointCloud shuffled = cloud;
  std::vector<int> perm = rng.permutation(24);
  for (int i = 0; i < 24; ++i) shuffled.points.row(i) = cloud.points.row(perm[static_cast<std::size_t>(i)]);

  PointCloud batch1[] = {cloud};
  PointCloud batch2[] = {shuffled};
  Matrix h1 = encode(store, batch1);
  Matrix h2 = encode(store, batch2);
  CHECK(h1 == h2);
}

TEST_CASE("a singleton batch matches its row in a larger batch bit-for-bit") {
  Rng rng(6);
  ParameterStore store = small_store();
  std::vector<PointCloud> batch;
  for (int i = 0; i < 5; ++i) batch.push_back(random_cloud(rng, 16));
  Matrix all = encode(store, batch);
  PointCloud single[] = {batch[3]};
  Matrix one = encode(store, single);
  CHECK(one.row(0) == all.row(3));
}

TEST_CASE("the all-zero cloud maps to a finite bias-driven representation") {
  ParameterStore store = small_store();
  PointCloud zero;
  zero.points = Matrix::Zero(12, 3);
  PointCloud batch[] = {zero};
  Matrix h = encode(store, batch);
  CHECK(h.allFinite());
  // every point is identical, so the pooled vector equals any single point's features
  PointCloud one_point;
  one_point.points = Matrix::Zero(12, 3);
  one_point.points.row(0) << 0, 0, 0;
  Matrix h2 = encode(store, std::span<const PointCloud>(&one_point, 1));
  CHECK(h == h2);
}

TEST_CASE("mixed point counts are rejected") {
  Rng rng(7);
  ParameterStore store = small_store();
  std::vector<PointCloud> batch{random_cloud(rng, 16), random_cloud(rng, 20)};
  CHECK_THROWS_AS(encode(store, batch), std::invalid_argument);
}

TEST_CASE("project with zero weights broadcasts the bias") {
  ParameterStore store = small_store();
  for (auto& [name, value] : store.items()) {
    if (name.starts_with("projector.")) value.fill(name.ends_with(".bias") ? 0.5 : 0.0);
  }
  Matrix h = Matrix::Random(4, store.encoder.repr_dim());
  Matrix z = project(store, h);
  CHECK(z.rows() == 4);
  CHECK(z.cols() == store.layout.embed_dim());
  // first layer: 0*h + 0.5 -> relu -> 0.5; second: 0.5*0 + 0.5
  CHECK((z.array() - 0.5).abs().maxCoeff() == 0.0);
}

TEST_CASE("embedding shape follows the segment layout") {
  Rng rng(8);
  ParameterStore store = small_store();
  std::vector<PointCloud> batch{random_cloud(rng, 16), random_cloud(rng, 16)};
  Matrix z = project(store, encode(store, batch));
  CHECK(z.rows() == 2);
  CHECK(z.cols() == small_layout().embed_dim());
}

TEST_CASE("encode chunking never changes results") {
  Rng rng(9);
  ParameterStore store = small_store();
  std::vector<PointCloud> batch;
  for (int i = 0; i < 70; ++i) batch.push_back(random_cloud(rng, 8));  // crosses the internal chunk size
  Matrix all = encode(store, batch);
  Matrix head = encode(store, std::span<const PointCloud>(batch.data(), 3));
  CHECK(all.topRows(3) == head);
}

TEST_CASE("checkpoint round-trip is bit-exact including config metadata") {
  fs::path path = fs::temp_directory_path() / "pjem_ckpt_roundtrip.bin";
  ParameterStore store = small_store(99);
  store.config_json = R"({"layout.K":3,"seed":99})";
  save_checkpoint(store, path);
  ParameterStore back = load_checkpoint(path);
  CHECK(stores_bit_equal(store, back));
  CHECK(back.layout.segments == store.layout.segments);
  CHECK(back.layout.entries_per_segment == store.layout.entries_per_segment);
  CHECK(back.encoder.widths == store.encoder.widths);
  CHECK(back.projector.hidden == store.projector.hidden);
  CHECK(back.projector.depth == store.projector.depth);
  CHECK(back.config_json == store.config_json);
}

TEST_CASE("checkpoint guards: magic, truncation, corruption, version") {
  fs::path dir = fs::temp_directory_path();
  ParameterStore store = small_store(3);
  fs::path good = dir / "pjem_ckpt_good.bin";
  save_checkpoint(store, good);

  auto slurp = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  };
  auto spit = [](const fs::path& p, const std::string& bytes) {
    std::ofstream out(p, std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  };
  std::string bytes = slurp(good);

  fs::path bad = dir / "pjem_ckpt_bad.bin";
  std::string wrong_magic = bytes;
  wrong_magic[0] = 'X';
  spit(bad, wrong_magic);
  CHECK_THROWS_WITH_AS(load_checkpoint(bad), doctest::Contains("magic"), std::runtime_error);

  std::string truncated = bytes.substr(0, bytes.size() / 2);
  spit(bad, truncated);
  CHECK_THROWS_AS(load_checkpoint(bad), std::runtime_error);

  std::string corrupted = bytes;
  corrupted[bytes.size() / 2] = static_cast<char>(corrupted[bytes.size() / 2] + 1);
  spit(bad, corrupted);
  CHECK_THROWS_WITH_AS(load_checkpoint(bad), doctest::Contains("checksum"), std::runtime_error);

  std::string wrong_version = bytes;
  wrong_version[4] = 9;  // version field; checksum must be rewritten to reach the version check
  {
    std::string body = wrong_version.substr(0, wrong_version.size() - 8);
    std::uint64_t hash = 14695981039346656037ull;
    for (unsigned char c : body) {
      hash ^= c;
      hash *= 1099511628211ull;
    }
    for (int i = 0; i < 8; ++i) wrong_version[body.size() + static_cast<std::size_t>(i)] =
        static_cast<char>((hash >> (8 * i)) & 0xff);
  }
  spit(bad, wrong_version);
  CHECK_THROWS_WITH_AS(load_checkpoint(bad), doctest::Contains("version"), std::runtime_error);
}
