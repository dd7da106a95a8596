/*=========================================================================
 *
 *  Copyright The flowreg contributors
 *
 *  Licensed under the Apache License, Version 2.0 (the "License");
 *  you may not use this file except in compliance with the License.
 *  You may obtain a copy of the License at
 *
 *         http://www.apache.org/licenses/LICENSE-2.0.txt
 *
 *  Unless required by applicable law or agreed to in writing, software
 *  distributed under the License is distributed on an "AS IS" BASIS,
 *  WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 *  See the License for the specific language governing permissions and
 *  limitations under the License.
 *
 *=========================================================================*/
#include "doctest.h"

#include "flowreg/container.hpp"
#include "flowreg/errors.hpp"
#include "support.hpp"

#include <fstream>
#include <random>
#include <sstream>

using namespace flowreg;
using namespace flowreg::testing;

namespace
{

class ScratchDir
{
public:
  ScratchDir()
  {
    std::random_device rd;
    m_Path = fs::temp_directory_path() / ("flowreg_test_" + std::to_string(rd()) + std::to_string(rd()));
    fs::create_directories(m_Path);
  }
  ~ScratchDir() { fs::remove_all(m_Path); }
  ScratchDir(const ScratchDir &) = delete;
  ScratchDir & operator=(const ScratchDir &) = delete;

  const fs::path &
  path() const
  {
    return m_Path;
  }

private:
  fs::path m_Path;
};

std::string
slurp(const fs::path & path)
{
  std::ifstream     in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void
spit(const fs::path & path, const std::string & text)
{
  std::ofstream out(path, std::ios::binary);
  out << text;
}

bool
same_values(const SpatialImage & a, const SpatialImage & b)
{
  return a.dims() == b.dims() && std::equal(a.values().begin(), a.values().end(), b.values().begin());
}

CorpusRecord
sample_record()
{
  CorpusRecord r;
  r.id = record_id(7);
  r.split = "validation";
  r.seed = 0xfeedfacecafebeefULL;
  r.sample_seed = 12345678901234567ULL;
  r.source = smooth_image({ 12, 10 }, 1);
  r.target = smooth_image({ 12, 10 }, 2);
  r.source_labels = LabelImage{ { 12, 10 }, std::vector<int>(120, 1) };
  r.target_labels = LabelImage{ { 12, 10 }, std::vector<int>(120, 2) };
  r.alpha_true = 6.0 / 7.0;
  r.v0_true = random_field({ 6, 6 }, { 12, 10 }, 3);
  r.alpha_map = std::nextafter(3.0, 4.0);
  r.v0_map = random_field({ 6, 6 }, { 12, 10 }, 4);
  r.converged = true;
  r.iterations = 42;
  r.stop_reason = "relative energy change below stop rate";
  r.map_seconds = 1.25;
  r.config.sigma = 0.05;
  r.config.trunc_dim = 6;
  r.bulleye = BullEyeSpec{};
  r.bulleye->outer_a = 33.3;
  return r;
}

} // namespace

TEST_SUITE("container")
{

TEST_CASE("record round trip is bit exact")
{
  ScratchDir   dir;
  const auto   r = sample_record();
  const auto   where = dir.path() / "records" / r.id;
  write_record(where, r);
  CHECK(fs::exists(where / "header.json"));
  CHECK(record_complete(where));

  const auto back = read_record(where);
  CHECK(back.id == r.id);
  CHECK(back.split == r.split);
  CHECK(back.status == "ok");
  CHECK(back.seed == r.seed);
  CHECK(back.sample_seed == r.sample_seed);
  CHECK(same_values(back.source, r.source));
  CHECK(same_values(back.target, r.target));
  CHECK(back.source_labels.labels == r.source_labels.labels);
  CHECK(back.target_labels.dims == r.target_labels.dims);
  REQUIRE(back.alpha_true.has_value());
  CHECK(*back.alpha_true == *r.alpha_true);
  REQUIRE(back.v0_true.has_value());
  CHECK(back.v0_true->trunc_dims() == r.v0_true->trunc_dims());
  CHECK(back.v0_true->grid_dims() == r.v0_true->grid_dims());
  CHECK(max_abs_diff(back.v0_true->coefficients(), r.v0_true->coefficients()) == 0.0);
  CHECK(back.alpha_map == r.alpha_map);
  CHECK(max_abs_diff(back.v0_map.coefficients(), r.v0_map.coefficients()) == 0.0);
  CHECK(back.converged);
  CHECK(back.iterations == 42);
  CHECK(back.stop_reason == r.stop_reason);
  CHECK(back.map_seconds == r.map_seconds);
  CHECK(back.config.sigma == 0.05);
  CHECK(back.config.trunc_dim == 6);
  REQUIRE(back.bulleye.has_value());
  CHECK(back.bulleye->outer_a == 33.3);

  // rewriting what was read gives identical files
  const auto again = dir.path() / "again";
  write_record(again, back);
  for (const auto & entry : fs::directory_iterator(where))
    CHECK(slurp(entry.path()) == slurp(again / entry.path().filename()));
}

TEST_CASE("incomplete and failed records")
{
  ScratchDir dir;
  CHECK_FALSE(record_complete(dir.path() / "missing"));
  CHECK_THROWS_AS(read_record(dir.path() / "missing"), IoError);

  auto r = sample_record();
  r.status = "failed";
  r.error = "every prior sample blew up";
  r.alpha_true.reset();
  r.v0_true.reset();
  write_record(dir.path() / "failed", r);
  CHECK_FALSE(record_complete(dir.path() / "failed"));
  const auto back = read_record(dir.path() / "failed");
  CHECK(back.status == "failed");
  CHECK(back.error == r.error);
  CHECK_FALSE(back.alpha_true.has_value());
  CHECK_FALSE(back.v0_true.has_value());

  write_record(dir.path() / "trunc", sample_record());
  fs::resize_file(dir.path() / "trunc" / "source.f64", 16);
  CHECK_THROWS_AS(read_record(dir.path() / "trunc"), IoError);
}

TEST_CASE("manifest and splits")
{
  const auto splits = assign_splits(100, 9);
  REQUIRE(splits.size() == 100);
  CHECK(std::count(splits.begin(), splits.end(), "train") == 70);
  CHECK(std::count(splits.begin(), splits.end(), "validation") == 15);
  CHECK(std::count(splits.begin(), splits.end(), "test") == 15);
  CHECK(assign_splits(100, 9) == splits);
  CHECK(assign_splits(100, 10) != splits);
  const auto small = assign_splits(7, 1);
  CHECK(small.size() == 7);

  CHECK(record_id(0) == "pair_00000");
  CHECK(record_id(123) == "pair_00123");

  ScratchDir dir;
  Manifest   m;
  m.seed = 77;
  m.records.push_back({ "pair_00000", "train", "ok", "", 5, 3.0, 4.5 });
  m.records.push_back({ "pair_00001", "test", "failed", "blew up", 6, std::nullopt, std::nullopt });
  write_manifest(dir.path() / "manifest.json", m);
  const auto back = read_manifest(dir.path() / "manifest.json");
  CHECK(back.seed == 77);
  REQUIRE(back.records.size() == 2);
  REQUIRE(back.find("pair_00001") != nullptr);
  CHECK(back.find("pair_00001")->error == "blew up");
  CHECK_FALSE(back.find("pair_00001")->alpha_true.has_value());
  CHECK(*back.find("pair_00000")->alpha_map == 4.5);
  CHECK(back.find("nope") == nullptr);

  m.records.push_back(m.records.front());
  CHECK_THROWS_AS(write_manifest(dir.path() / "dup.json", m), std::invalid_argument);
}

TEST_CASE("PGM images")
{
  ScratchDir dir;
  SpatialImage img({ 3, 4 });
  for (std::size_t p = 0; p < img.size(); ++p)
    img[p] = static_cast<double>(p) / 11.0;

  write_pgm(dir.path() / "a8.pgm", img, 8);
  const auto a8 = read_pgm(dir.path() / "a8.pgm");
  CHECK(a8.dims() == img.dims());
  for (std::size_t p = 0; p < img.size(); ++p)
    CHECK(std::abs(a8[p] - img[p]) <= 0.5 / 255 + 1e-12);

  write_pgm(dir.path() / "a16.pgm", img, 16);
  const auto a16 = read_image(dir.path() / "a16.pgm");
  for (std::size_t p = 0; p < img.size(); ++p)
    CHECK(std::abs(a16[p] - img[p]) <= 0.5 / 65535 + 1e-12);

  spit(dir.path() / "ascii.pgm", "P2\n# comment\n2 2\n4\n0 1\n2 4\n");
  const auto ascii = read_pgm(dir.path() / "ascii.pgm");
  CHECK(ascii.dims() == std::vector<int>{ 2, 2 });
  CHECK(ascii[1] == 0.25);
  CHECK(ascii[3] == 1.0);

  spit(dir.path() / "bad.pgm", "P6\n2 2\n255\nxxxxxxxxxxxx");
  CHECK_THROWS_AS(read_pgm(dir.path() / "bad.pgm"), IoError);
  spit(dir.path() / "short.pgm", "P5\n4 4\n255\nab");
  CHECK_THROWS_AS(read_pgm(dir.path() / "short.pgm"), IoError);
  CHECK_THROWS_AS(write_pgm(dir.path() / "x.pgm", img, 12), std::invalid_argument);
  CHECK_THROWS_AS(read_image(dir.path() / "x.png"), IoError);
}

TEST_CASE("flat images and fields")
{
  ScratchDir dir;
  const auto img = smooth_image({ 5, 6, 7 }, 3, 4);
  write_flat_image(dir.path() / "vol", img);
  CHECK(same_values(read_image(dir.path() / "vol.json"), img));
  CHECK(same_values(read_image(dir.path() / "vol.f64"), img));

  const auto f = random_field({ 4, 4 }, { 8, 9 }, 5);
  write_field(dir.path() / "coeffs", f);
  const auto g = read_field(dir.path() / "coeffs");
  CHECK(g.trunc_dims() == f.trunc_dims());
  CHECK(g.grid_dims() == f.grid_dims());
  CHECK(max_abs_diff(g.coefficients(), f.coefficients()) == 0.0);

  const std::vector<double> raw{ 1.0, -2.5, 1e-300 };
  write_f64(dir.path() / "raw.f64", raw);
  CHECK(read_f64(dir.path() / "raw.f64", 3) == raw);
  CHECK(fs::file_size(dir.path() / "raw.f64") == 24);
  CHECK_THROWS_AS(read_f64(dir.path() / "raw.f64", 4), IoError);
}

TEST_CASE("predictions and sidecar")
{
  ScratchDir  dir;
  Predictions p;
  p.alpha["pair_00000"] = 3.25;
  p.alpha["pair_00001"] = 1.0 / 3.0;
  p.sidecar = PredictionSidecar{ 0.004, 512.5, "abc123" };
  write_predictions(dir.path() / "pred.csv", p);
  CHECK(slurp(dir.path() / "pred.csv").rfind("id,alpha_pred\n", 0) == 0);
  CHECK(fs::exists(dir.path() / "pred.json"));

  const auto back = read_predictions(dir.path() / "pred.csv");
  CHECK(back.alpha == p.alpha);
  REQUIRE(back.sidecar.has_value());
  CHECK(*back.sidecar->seconds_per_pair == 0.004);
  CHECK(*back.sidecar->peak_rss_mb == 512.5);
  CHECK(back.sidecar->model_hash == "abc123");

  spit(dir.path() / "bare.csv", "id,alpha_pred\r\npair_00003,2.5\r\n\r\n");
  const auto bare = read_predictions(dir.path() / "bare.csv");
  CHECK(bare.alpha.at("pair_00003") == 2.5);
  CHECK_FALSE(bare.sidecar.has_value());

  spit(dir.path() / "hdr.csv", "id,alpha\npair_1,2\n");
  CHECK_THROWS_AS(read_predictions(dir.path() / "hdr.csv"), IoError);
  spit(dir.path() / "val.csv", "id,alpha_pred\npair_1,abc\n");
  CHECK_THROWS_AS(read_predictions(dir.path() / "val.csv"), IoError);
  spit(dir.path() / "dup.csv", "id,alpha_pred\npair_1,2\npair_1,3\n");
  CHECK_THROWS_AS(read_predictions(dir.path() / "dup.csv"), IoError);
}

TEST_CASE("configuration")
{
  const auto cfg = config_from_json_text(R"({"sigma": 0.05, "trunc_dim": 12, "max_iters": 7})");
  CHECK(cfg.sigma == 0.05);
  CHECK(cfg.trunc_dim == 12);
  CHECK(cfg.max_iters == 7);
  CHECK(cfg.power == PosteriorConfig{}.power);

  const auto round = config_from_json_text(config_to_json_text(cfg));
  CHECK(round.sigma == cfg.sigma);
  CHECK(round.eps == cfg.eps);
  CHECK(round.trunc_dim == cfg.trunc_dim);

  CHECK_THROWS_AS(config_from_json_text(R"({"sigmaa": 1})"), std::invalid_argument);
  CHECK_THROWS_AS(config_from_json_text(R"({"gamma": 1})"), std::invalid_argument);
  CHECK_THROWS_AS(config_from_json_text(R"({"sigma": "big"})"), std::invalid_argument);
  CHECK_THROWS_AS(config_from_json_text("[1, 2]"), std::invalid_argument);
  CHECK_THROWS_AS(config_from_json_text("{"), std::invalid_argument);

  ScratchDir dir;
  spit(dir.path() / "cfg.json", R"({"n_steps": 20})");
  CHECK(load_config(dir.path() / "cfg.json").n_steps == 20);
  CHECK_THROWS_AS(load_config(dir.path() / "absent.json"), IoError);
}

} // TEST_SUITE
