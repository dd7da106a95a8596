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
#include "flowreg/container.hpp"

#include "flowreg/errors.hpp"

#include "json.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>

namespace flowreg
{

using nlohmann::json;

namespace
{

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

std::uint64_t
to_le(std::uint64_t x)
{
  if constexpr (std::endian::native == std::endian::big)
    return __builtin_bswap64(x);
  return x;
}

std::uint32_t
to_le(std::uint32_t x)
{
  if constexpr (std::endian::native == std::endian::big)
    return __builtin_bswap32(x);
  return x;
}

std::ofstream
open_out(const fs::path & path)
{
  if (path.has_parent_path())
    fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out)
    throw IoError("cannot open " + path.string() + " for writing");
  return out;
}

std::ifstream
open_in(const fs::path & path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw IoError("cannot open " + path.string());
  return in;
}

std::vector<char>
slurp(const fs::path & path)
{
  auto in = open_in(path);
  return std::vector<char>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void
write_doubles(const fs::path & path, const double * values, std::size_t n)
{
  auto              out = open_out(path);
  std::vector<char> buffer(n * 8);
  for (std::size_t i = 0; i < n; ++i)
  {
    const std::uint64_t bits = to_le(std::bit_cast<std::uint64_t>(values[i]));
    std::memcpy(buffer.data() + 8 * i, &bits, 8);
  }
  out.write(buffer.data(), static_cast<std::streamsize>(buffer.size()));
  if (!out)
    throw IoError("write failed: " + path.string());
}

std::vector<double>
read_doubles(const fs::path & path, std::size_t expected)
{
  const auto bytes = slurp(path);
  if (bytes.size() != expected * 8)
    throw IoError(path.string() + ": expected " + std::to_string(expected * 8) + " bytes, found " +
                  std::to_string(bytes.size()));
  std::vector<double> values(expected);
  for (std::size_t i = 0; i < expected; ++i)
  {
    std::uint64_t bits;
    std::memcpy(&bits, bytes.data() + 8 * i, 8);
    values[i] = std::bit_cast<double>(to_le(bits));
  }
  return values;
}

void
write_ints(const fs::path & path, std::span<const int> values)
{
  auto              out = open_out(path);
  std::vector<char> buffer(values.size() * 4);
  for (std::size_t i = 0; i < values.size(); ++i)
  {
    const std::uint32_t bits = to_le(static_cast<std::uint32_t>(values[i]));
    std::memcpy(buffer.data() + 4 * i, &bits, 4);
  }
  out.write(buffer.data(), static_cast<std::streamsize>(buffer.size()));
  if (!out)
    throw IoError("write failed: " + path.string());
}

std::vector<int>
read_ints(const fs::path & path, std::size_t expected)
{
  const auto bytes = slurp(path);
  if (bytes.size() != expected * 4)
    throw IoError(path.string() + ": unexpected size");
  std::vector<int> values(expected);
  for (std::size_t i = 0; i < expected; ++i)
  {
    std::uint32_t bits;
    std::memcpy(&bits, bytes.data() + 4 * i, 4);
    values[i] = static_cast<int>(to_le(bits));
  }
  return values;
}

json
read_json(const fs::path & path)
{
  auto in = open_in(path);
  try
  {
    return json::parse(in);
  }
  catch (const json::exception & e)
  {
    throw IoError(path.string() + ": " + e.what());
  }
}

void
write_json(const fs::path & path, const json & doc)
{
  auto out = open_out(path);
  out << doc.dump(2) << '\n';
  if (!out)
    throw IoError("write failed: " + path.string());
}

// Keys mirror the PosteriorConfig and IntegratorConfig field names.
json
config_json(const PosteriorConfig & cfg)
{
  return json{ { "sigma", cfg.sigma },
               { "alpha_init", cfg.alpha_init },
               { "eps", cfg.eps },
               { "tau", cfg.tau },
               { "max_iters", cfg.max_iters },
               { "stop_rate", cfg.stop_rate },
               { "q_min", cfg.q_min },
               { "n_steps", cfg.n_steps },
               { "trunc_dim", cfg.trunc_dim },
               { "power", cfg.power },
               { "max_halvings", cfg.max_halvings },
               { "step_growth", cfg.step_growth },
               { "grad_threshold", cfg.grad_threshold },
               { "alpha_floor", cfg.alpha_floor } };
}

PosteriorConfig
config_from(const json & doc, PosteriorConfig cfg)
{
  if (!doc.is_object())
    throw std::invalid_argument("configuration must be a JSON object");
  for (const auto & [key, value] : doc.items())
  {
    if (!value.is_number())
      throw std::invalid_argument("configuration key '" + key + "' must be numeric");
    if (key == "sigma")
      cfg.sigma = value.get<double>();
    else if (key == "alpha_init")
      cfg.alpha_init = value.get<double>();
    else if (key == "eps")
      cfg.eps = value.get<double>();
    else if (key == "tau")
      cfg.tau = value.get<double>();
    else if (key == "max_iters")
      cfg.max_iters = value.get<int>();
    else if (key == "stop_rate")
      cfg.stop_rate = value.get<double>();
    else if (key == "q_min")
      cfg.q_min = value.get<int>();
    else if (key == "n_steps")
      cfg.n_steps = value.get<int>();
    else if (key == "trunc_dim")
      cfg.trunc_dim = value.get<int>();
    else if (key == "power")
      cfg.power = value.get<int>();
    else if (key == "max_halvings")
      cfg.max_halvings = value.get<int>();
    else if (key == "step_growth")
      cfg.step_growth = value.get<double>();
    else if (key == "grad_threshold")
      cfg.grad_threshold = value.get<double>();
    else if (key == "alpha_floor")
      cfg.alpha_floor = value.get<double>();
    else if (key == "gamma")
      throw std::invalid_argument("gamma is derived as 1 / sigma^2; set sigma instead");
    else
      throw std::invalid_argument("unknown configuration key '" + key + "'");
  }
  cfg.validate();
  return cfg;
}

json
bulleye_json(const BullEyeSpec & spec)
{
  return json{ { "dims", spec.dims },         { "center_x", spec.center_x }, { "center_y", spec.center_y },
               { "outer_a", spec.outer_a },   { "outer_b", spec.outer_b },   { "inner_a", spec.inner_a },
               { "inner_b", spec.inner_b },   { "background", spec.background }, { "ring", spec.ring },
               { "disk", spec.disk },         { "ramp_width", spec.ramp_width } };
}

BullEyeSpec
bulleye_from(const json & doc)
{
  BullEyeSpec spec;
  spec.dims = doc.at("dims").get<std::vector<int>>();
  spec.center_x = doc.at("center_x").get<double>();
  spec.center_y = doc.at("center_y").get<double>();
  spec.outer_a = doc.at("outer_a").get<double>();
  spec.outer_b = doc.at("outer_b").get<double>();
  spec.inner_a = doc.at("inner_a").get<double>();
  spec.inner_b = doc.at("inner_b").get<double>();
  spec.background = doc.at("background").get<double>();
  spec.ring = doc.at("ring").get<double>();
  spec.disk = doc.at("disk").get<double>();
  spec.ramp_width = doc.at("ramp_width").get<double>();
  return spec;
}

json
image_entry(const std::string & file, const std::vector<int> & dims, const char * dtype)
{
  return json{ { "file", file }, { "dtype", dtype }, { "shape", dims } };
}

json
field_entry(const std::string & file, const BandlimitedField & f)
{
  std::vector<int> shape{ f.components() };
  shape.insert(shape.end(), f.trunc_dims().begin(), f.trunc_dims().end());
  return json{ { "file", file }, { "dtype", "complex128" }, { "shape", shape }, { "grid_dims", f.grid_dims() } };
}

BandlimitedField
read_field_entry(const fs::path & dir, const json & entry)
{
  if (entry.at("dtype") != "complex128")
    throw IoError("expected a complex128 array");
  const auto shape = entry.at("shape").get<std::vector<int>>();
  if (shape.size() < 2)
    throw IoError("malformed field shape");
  std::vector<int> trunc(shape.begin() + 1, shape.end());
  BandlimitedField f(trunc, entry.at("grid_dims").get<std::vector<int>>(), shape[0]);
  const auto       values = read_c128(dir / entry.at("file").get<std::string>(), f.coefficients().size());
  std::copy(values.begin(), values.end(), f.coefficients().begin());
  return f;
}

SpatialImage
read_image_entry(const fs::path & dir, const json & entry)
{
  if (entry.at("dtype") != "float64")
    throw IoError("expected a float64 array");
  auto dims = entry.at("shape").get<std::vector<int>>();
  auto values = read_doubles(dir / entry.at("file").get<std::string>(), voxel_count(dims));
  return SpatialImage(std::move(dims), std::move(values));
}

LabelImage
read_label_entry(const fs::path & dir, const json & entry)
{
  if (entry.at("dtype") != "int32")
    throw IoError("expected an int32 array");
  auto dims = entry.at("shape").get<std::vector<int>>();
  auto labels = read_ints(dir / entry.at("file").get<std::string>(), voxel_count(dims));
  return LabelImage{ std::move(dims), std::move(labels) };
}

template <typename T>
std::optional<T>
optional_at(const json & doc, const char * key)
{
  if (!doc.contains(key) || doc.at(key).is_null())
    return std::nullopt;
  return doc.at(key).get<T>();
}

} // namespace

// ---------------------------------------------------------------------------
// Raw arrays

void
write_f64(const fs::path & path, std::span<const double> values)
{
  write_doubles(path, values.data(), values.size());
}

std::vector<double>
read_f64(const fs::path & path, std::size_t expected)
{
  return read_doubles(path, expected);
}

void
write_c128(const fs::path & path, std::span<const Complex> values)
{
  static_assert(sizeof(Complex) == 2 * sizeof(double));
  write_doubles(path, reinterpret_cast<const double *>(values.data()), 2 * values.size());
}

std::vector<Complex>
read_c128(const fs::path & path, std::size_t expected)
{
  const auto           flat = read_doubles(path, 2 * expected);
  std::vector<Complex> values(expected);
  for (std::size_t i = 0; i < expected; ++i)
    values[i] = Complex(flat[2 * i], flat[2 * i + 1]);
  return values;
}

// ---------------------------------------------------------------------------
// Records

void
write_record(const fs::path & dir, const CorpusRecord & record)
{
  fs::create_directories(dir);
  json header{ { "format_version", kFormatVersion },
               { "id", record.id },
               { "split", record.split },
               { "status", record.status },
               { "error", record.error },
               { "seed", record.seed },
               { "sample_seed", record.sample_seed },
               { "alpha_true", record.alpha_true ? json(*record.alpha_true) : json(nullptr) },
               { "alpha_map", record.alpha_map },
               { "converged", record.converged },
               { "iterations", record.iterations },
               { "stop_reason", record.stop_reason },
               { "map_seconds", record.map_seconds },
               { "config", config_json(record.config) },
               { "bulleye", record.bulleye ? bulleye_json(*record.bulleye) : json(nullptr) } };

  json arrays = json::object();
  if (record.source.size() > 0)
  {
    write_f64(dir / "source.f64", record.source.values());
    arrays["source"] = image_entry("source.f64", record.source.dims(), "float64");
  }
  if (record.target.size() > 0)
  {
    write_f64(dir / "target.f64", record.target.values());
    arrays["target"] = image_entry("target.f64", record.target.dims(), "float64");
  }
  if (!record.source_labels.labels.empty())
  {
    write_ints(dir / "source_labels.i32", record.source_labels.labels);
    arrays["source_labels"] = image_entry("source_labels.i32", record.source_labels.dims, "int32");
  }
  if (!record.target_labels.labels.empty())
  {
    write_ints(dir / "target_labels.i32", record.target_labels.labels);
    arrays["target_labels"] = image_entry("target_labels.i32", record.target_labels.dims, "int32");
  }
  if (record.v0_map.components() > 0)
  {
    write_c128(dir / "v0_map.c128", record.v0_map.coefficients());
    arrays["v0_map"] = field_entry("v0_map.c128", record.v0_map);
  }
  if (record.v0_true)
  {
    write_c128(dir / "v0_true.c128", record.v0_true->coefficients());
    arrays["v0_true"] = field_entry("v0_true.c128", *record.v0_true);
  }
  header["arrays"] = arrays;
  // header last
  write_json(dir / "header.json", header);
}

CorpusRecord
read_record(const fs::path & dir)
{
  const json header = read_json(dir / "header.json");
  try
  {
    if (header.at("format_version").get<int>() != kFormatVersion)
      throw IoError(dir.string() + ": unsupported format version");
    CorpusRecord record;
    record.id = header.at("id").get<std::string>();
    record.split = header.at("split").get<std::string>();
    record.status = header.at("status").get<std::string>();
    record.error = header.at("error").get<std::string>();
    record.seed = header.at("seed").get<std::uint64_t>();
    record.sample_seed = header.at("sample_seed").get<std::uint64_t>();
    record.alpha_true = optional_at<double>(header, "alpha_true");
    record.alpha_map = header.at("alpha_map").get<double>();
    record.converged = header.at("converged").get<bool>();
    record.iterations = header.at("iterations").get<int>();
    record.stop_reason = header.at("stop_reason").get<std::string>();
    record.map_seconds = header.at("map_seconds").get<double>();
    record.config = config_from(header.at("config"), PosteriorConfig{});
    if (!header.at("bulleye").is_null())
      record.bulleye = bulleye_from(header.at("bulleye"));

    const json & arrays = header.at("arrays");
    if (arrays.contains("source"))
      record.source = read_image_entry(dir, arrays.at("source"));
    if (arrays.contains("target"))
      record.target = read_image_entry(dir, arrays.at("target"));
    if (arrays.contains("source_labels"))
      record.source_labels = read_label_entry(dir, arrays.at("source_labels"));
    if (arrays.contains("target_labels"))
      record.target_labels = read_label_entry(dir, arrays.at("target_labels"));
    if (arrays.contains("v0_map"))
      record.v0_map = read_field_entry(dir, arrays.at("v0_map"));
    if (arrays.contains("v0_true"))
      record.v0_true = read_field_entry(dir, arrays.at("v0_true"));
    return record;
  }
  catch (const json::exception & e)
  {
    throw IoError(dir.string() + "/header.json: " + e.what());
  }
}

bool
record_complete(const fs::path & dir)
{
  const auto path = dir / "header.json";
  if (!fs::exists(path))
    return false;
  try
  {
    return read_json(path).value("status", "") == "ok";
  }
  catch (const IoError &)
  {
    return false;
  }
}

// ---------------------------------------------------------------------------
// Manifest

const ManifestEntry *
Manifest::find(const std::string & id) const
{
  const auto it = std::find_if(records.begin(), records.end(), [&](const ManifestEntry & e) { return e.id == id; });
  return it == records.end() ? nullptr : &*it;
}

std::string
record_id(std::size_t index)
{
  std::ostringstream id;
  id << "pair_" << std::setw(5) << std::setfill('0') << index;
  return id.str();
}

std::vector<std::string>
assign_splits(std::size_t n, std::uint64_t seed)
{
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i)
    order[i] = i;
  std::mt19937_64 rng(derive_seed(seed, "split"));
  std::shuffle(order.begin(), order.end(), rng);

  const std::size_t        n_train = (n * 70 + 50) / 100;
  const std::size_t        n_val = std::min(n - n_train, (n * 15 + 50) / 100);
  std::vector<std::string> split(n);
  for (std::size_t rank = 0; rank < n; ++rank)
    split[order[rank]] = rank < n_train ? "train" : rank < n_train + n_val ? "validation" : "test";
  return split;
}

void
write_manifest(const fs::path & path, const Manifest & manifest)
{
  std::vector<std::string> ids;
  json                     records = json::array();
  json                     splits{ { "train", json::array() }, { "validation", json::array() }, { "test", json::array() } };
  for (const auto & e : manifest.records)
  {
    if (std::find(ids.begin(), ids.end(), e.id) != ids.end())
      throw std::invalid_argument("manifest: duplicate record id " + e.id);
    ids.push_back(e.id);
    records.push_back(json{ { "id", e.id },
                            { "split", e.split },
                            { "status", e.status },
                            { "error", e.error },
                            { "seed", e.seed },
                            { "alpha_true", e.alpha_true ? json(*e.alpha_true) : json(nullptr) },
                            { "alpha_map", e.alpha_map ? json(*e.alpha_map) : json(nullptr) },
                            { "path", "records/" + e.id } });
    if (splits.contains(e.split))
      splits[e.split].push_back(e.id);
  }
  write_json(path,
             json{ { "format_version", kFormatVersion }, { "seed", manifest.seed }, { "records", records }, { "splits", splits } });
}

Manifest
read_manifest(const fs::path & path)
{
  const json doc = read_json(path);
  try
  {
    Manifest manifest;
    manifest.seed = doc.at("seed").get<std::uint64_t>();
    for (const auto & r : doc.at("records"))
    {
      ManifestEntry e;
      e.id = r.at("id").get<std::string>();
      e.split = r.at("split").get<std::string>();
      e.status = r.at("status").get<std::string>();
      e.error = r.value("error", "");
      e.seed = r.at("seed").get<std::uint64_t>();
      e.alpha_true = optional_at<double>(r, "alpha_true");
      e.alpha_map = optional_at<double>(r, "alpha_map");
      manifest.records.push_back(std::move(e));
    }
    return manifest;
  }
  catch (const json::exception & e)
  {
    throw IoError(path.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Images

void
write_pgm(const fs::path & path, const SpatialImage & image, int bits, double lo, double hi)
{
  if (image.rank() != 2)
    throw ShapeError("write_pgm: only 2D images");
  if (bits != 8 && bits != 16)
    throw std::invalid_argument("write_pgm: bits must be 8 or 16");
  if (!(hi > lo))
    throw std::invalid_argument("write_pgm: empty intensity window");
  const int maxval = bits == 8 ? 255 : 65535;
  auto      out = open_out(path);
  out << "P5\n" << image.dims()[1] << ' ' << image.dims()[0] << '\n' << maxval << '\n';
  std::vector<unsigned char> buffer;
  buffer.reserve(image.size() * (bits / 8));
  for (std::size_t p = 0; p < image.size(); ++p)
  {
    const double scaled = std::clamp((image[p] - lo) / (hi - lo), 0.0, 1.0) * maxval;
    const auto   level = static_cast<unsigned>(std::lround(scaled));
    if (bits == 16)
      buffer.push_back(static_cast<unsigned char>(level >> 8));
    buffer.push_back(static_cast<unsigned char>(level & 0xff));
  }
  out.write(reinterpret_cast<const char *>(buffer.data()), static_cast<std::streamsize>(buffer.size()));
  if (!out)
    throw IoError("write failed: " + path.string());
}

SpatialImage
read_pgm(const fs::path & path)
{
  const auto  bytes = slurp(path);
  std::size_t pos = 0;
  const auto  next_token = [&]() -> std::string {
    while (pos < bytes.size())
    {
      if (bytes[pos] == '#')
        while (pos < bytes.size() && bytes[pos] != '\n')
          ++pos;
      else if (std::isspace(static_cast<unsigned char>(bytes[pos])))
        ++pos;
      else
        break;
    }
    std::string token;
    while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos])))
      token.push_back(bytes[pos++]);
    return token;
  };
  const auto number = [&]() {
    const auto token = next_token();
    int        value = 0;
    const auto [end, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    if (ec != std::errc() || end != token.data() + token.size() || value <= 0)
      throw IoError(path.string() + ": malformed PGM header");
    return value;
  };

  const auto magic = next_token();
  if (magic != "P5" && magic != "P2")
    throw IoError(path.string() + ": not a PGM file");
  const int width = number();
  const int height = number();
  const int maxval = number();
  if (maxval > 65535)
    throw IoError(path.string() + ": maxval above 65535");

  SpatialImage      image({ height, width });
  const std::size_t n = image.size();
  if (magic == "P5")
  {
    ++pos; // single whitespace after maxval
    const std::size_t depth = maxval < 256 ? 1 : 2;
    if (bytes.size() < pos + n * depth)
      throw IoError(path.string() + ": truncated PGM data");
    for (std::size_t p = 0; p < n; ++p)
    {
      const auto * b = reinterpret_cast<const unsigned char *>(bytes.data() + pos + p * depth);
      const int    level = depth == 1 ? b[0] : (b[0] << 8) | b[1];
      image[p] = static_cast<double>(level) / maxval;
    }
  }
  else
  {
    for (std::size_t p = 0; p < n; ++p)
    {
      const auto token = next_token();
      int        level = 0;
      const auto [end, ec] = std::from_chars(token.data(), token.data() + token.size(), level);
      if (token.empty() || ec != std::errc() || level < 0 || level > maxval)
        throw IoError(path.string() + ": malformed PGM data");
      image[p] = static_cast<double>(level) / maxval;
    }
  }
  return image;
}

void
write_flat_image(const fs::path & stem, const SpatialImage & image)
{
  auto base = stem;
  base.replace_extension();
  write_f64(fs::path(base).concat(".f64"), image.values());
  write_json(fs::path(base).concat(".json"),
             json{ { "dims", image.dims() }, { "dtype", "float64" }, { "file", base.filename().string() + ".f64" } });
}

SpatialImage
read_image(const fs::path & path)
{
  const auto ext = path.extension().string();
  if (ext == ".pgm")
    return read_pgm(path);
  if (ext != ".json" && ext != ".f64")
    throw IoError(path.string() + ": unsupported image format (expected .pgm, .json or .f64)");
  auto base = path;
  base.replace_extension();
  const json header = read_json(fs::path(base).concat(".json"));
  try
  {
    if (header.value("dtype", "float64") != "float64")
      throw IoError(path.string() + ": only float64 flat images are supported");
    auto dims = header.at("dims").get<std::vector<int>>();
    auto values = read_f64(fs::path(base).concat(".f64"), voxel_count(dims));
    return SpatialImage(std::move(dims), std::move(values));
  }
  catch (const json::exception & e)
  {
    throw IoError(path.string() + ": " + e.what());
  }
}

void
write_vector_image(const fs::path & stem, const VectorImage & field)
{
  auto base = stem;
  base.replace_extension();
  std::vector<double> flat;
  for (const auto & c : field.components)
    flat.insert(flat.end(), c.begin(), c.end());
  write_f64(fs::path(base).concat(".f64"), flat);
  std::vector<int> shape{ static_cast<int>(field.components.size()) };
  shape.insert(shape.end(), field.dims.begin(), field.dims.end());
  write_json(fs::path(base).concat(".json"),
             json{ { "dims", shape }, { "dtype", "float64" }, { "file", base.filename().string() + ".f64" } });
}

void
write_field(const fs::path & stem, const BandlimitedField & field)
{
  auto base = stem;
  base.replace_extension();
  const auto file = base.filename().string() + ".c128";
  write_c128(fs::path(base).concat(".c128"), field.coefficients());
  write_json(fs::path(base).concat(".json"), field_entry(file, field));
}

BandlimitedField
read_field(const fs::path & stem)
{
  auto base = stem;
  base.replace_extension();
  const json entry = read_json(fs::path(base).concat(".json"));
  try
  {
    return read_field_entry(base.parent_path(), entry);
  }
  catch (const json::exception & e)
  {
    throw IoError(stem.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Predictions

Predictions
read_predictions(const fs::path & csv)
{
  auto        in = open_in(csv);
  Predictions predictions;
  std::string line;
  int         line_no = 0;
  bool        header = false;
  while (std::getline(in, line))
  {
    ++line_no;
    if (!line.empty() && line.back() == '\r')
      line.pop_back();
    if (line.empty())
      continue;
    if (!header)
    {
      if (line != "id,alpha_pred")
        throw IoError(csv.string() + ":" + std::to_string(line_no) + ": expected header 'id,alpha_pred'");
      header = true;
      continue;
    }
    const auto comma = line.find(',');
    if (comma == std::string::npos)
      throw IoError(csv.string() + ":" + std::to_string(line_no) + ": expected 'id,alpha_pred'");
    const std::string id = line.substr(0, comma);
    const std::string value = line.substr(comma + 1);
    double     alpha = 0.0;
    const auto [end, ec] = std::from_chars(value.data(), value.data() + value.size(), alpha);
    if (ec != std::errc() || end != value.data() + value.size() || !std::isfinite(alpha))
      throw IoError(csv.string() + ":" + std::to_string(line_no) + ": bad alpha value '" + value + "'");
    if (id.empty())
      throw IoError(csv.string() + ":" + std::to_string(line_no) + ": empty id");
    if (!predictions.alpha.emplace(id, alpha).second)
      throw IoError(csv.string() + ": duplicate id " + id);
  }

  auto sidecar_path = csv;
  sidecar_path.replace_extension(".json");
  if (fs::exists(sidecar_path))
  {
    const json        doc = read_json(sidecar_path);
    PredictionSidecar sidecar;
    if (doc.contains("timings"))
    {
      const auto & t = doc.at("timings");
      sidecar.seconds_per_pair = optional_at<double>(t, "seconds_per_pair");
      sidecar.peak_rss_mb = optional_at<double>(t, "peak_rss_mb");
    }
    sidecar.model_hash = doc.value("model_hash", "");
    predictions.sidecar = sidecar;
  }
  return predictions;
}

void
write_predictions(const fs::path & csv, const Predictions & predictions)
{
  {
    auto out = open_out(csv);
    out << "id,alpha_pred\n" << std::setprecision(17);
    for (const auto & [id, alpha] : predictions.alpha)
      out << id << ',' << alpha << '\n';
  }
  if (predictions.sidecar)
  {
    auto sidecar_path = csv;
    sidecar_path.replace_extension(".json");
    const auto & s = *predictions.sidecar;
    write_json(sidecar_path,
               json{ { "timings",
                       { { "seconds_per_pair", s.seconds_per_pair ? json(*s.seconds_per_pair) : json(nullptr) },
                         { "peak_rss_mb", s.peak_rss_mb ? json(*s.peak_rss_mb) : json(nullptr) } } },
                     { "model_hash", s.model_hash } });
  }
}

// ---------------------------------------------------------------------------
// Configuration

PosteriorConfig
config_from_json_text(const std::string & text, PosteriorConfig cfg)
{
  json doc;
  try
  {
    doc = json::parse(text);
  }
  catch (const json::exception & e)
  {
    throw std::invalid_argument(std::string("configuration is not valid JSON: ") + e.what());
  }
  return config_from(doc, cfg);
}

PosteriorConfig
load_config(const fs::path & path, PosteriorConfig cfg)
{
  return config_from(read_json(path), cfg);
}

std::string
config_to_json_text(const PosteriorConfig & cfg)
{
  return config_json(cfg).dump(2);
}

} // namespace flowreg
