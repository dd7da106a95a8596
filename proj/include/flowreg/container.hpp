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
#pragma once

// On-disk formats shared with the predictor.
//
// A corpus is a directory holding manifest.json and records/<id>/, where each
// record directory has header.json plus raw little-endian arrays:
// *.f64 (float64), *.c128 (interleaved real/imag float64), *.i32 (int32).
// Images given on the command line are either 8/16-bit PGM or a flat .f64
// array next to a .json header {"dims": [...], "dtype": "float64"}.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "flowreg/image.hpp"
#include "flowreg/posterior.hpp"
#include "flowreg/spectral.hpp"
#include "flowreg/synth.hpp"

namespace flowreg
{

namespace fs = std::filesystem;

inline constexpr int kFormatVersion = 1;

struct CorpusRecord
{
  std::string   id;
  std::string   split;         // train, validation or test
  std::string   status = "ok"; // ok or failed
  std::string   error;
  std::uint64_t seed = 0;
  std::uint64_t sample_seed = 0;

  SpatialImage                    source;
  SpatialImage                    target;
  LabelImage                      source_labels;
  LabelImage                      target_labels;
  std::optional<double>           alpha_true;
  std::optional<BandlimitedField> v0_true;

  double           alpha_map = 0.0;
  BandlimitedField v0_map;
  bool             converged = false;
  int              iterations = 0;
  std::string      stop_reason;
  double           map_seconds = 0.0;

  PosteriorConfig            config;
  std::optional<BullEyeSpec> bulleye;
};

/// Writes header.json and the array files into dir (created if needed).
void
write_record(const fs::path & dir, const CorpusRecord & record);

CorpusRecord
read_record(const fs::path & dir);

/// True when dir holds a header whose status is "ok".
bool
record_complete(const fs::path & dir);

struct ManifestEntry
{
  std::string   id;
  std::string   split;
  std::string   status;
  std::string   error;
  std::uint64_t seed = 0;
  std::optional<double> alpha_true;
  std::optional<double> alpha_map;
};

struct Manifest
{
  std::uint64_t              seed = 0;
  std::vector<ManifestEntry> records;

  const ManifestEntry *
  find(const std::string & id) const;
};

void
write_manifest(const fs::path & path, const Manifest & manifest);

Manifest
read_manifest(const fs::path & path);

/// Shuffled 70/15/15 train/validation/test assignment of n records.
std::vector<std::string>
assign_splits(std::size_t n, std::uint64_t seed);

/// Record id of the i-th pair of a corpus.
std::string
record_id(std::size_t index);

// Raw arrays -----------------------------------------------------------------

void
write_f64(const fs::path & path, std::span<const double> values);
std::vector<double>
read_f64(const fs::path & path, std::size_t expected);

void
write_c128(const fs::path & path, std::span<const Complex> values);
std::vector<Complex>
read_c128(const fs::path & path, std::size_t expected);

// Images ---------------------------------------------------------------------

/// Maps [lo, hi] linearly onto [0, maxval] with clamping; bits is 8 or 16.
void
write_pgm(const fs::path & path, const SpatialImage & image, int bits = 8, double lo = 0.0, double hi = 1.0);

/// Reads P2 or P5 PGM, scaled to [0, 1] by maxval.
SpatialImage
read_pgm(const fs::path & path);

/// Writes stem.f64 and stem.json.
void
write_flat_image(const fs::path & stem, const SpatialImage & image);

/// Dispatches on extension: .pgm, or .json / .f64 for the flat format.
SpatialImage
read_image(const fs::path & path);

/// Component-major flat displacement or coefficient dumps for the CLI.
void
write_vector_image(const fs::path & stem, const VectorImage & field);
void
write_field(const fs::path & stem, const BandlimitedField & field);
BandlimitedField
read_field(const fs::path & stem);

// Predictions ----------------------------------------------------------------

struct PredictionSidecar
{
  std::optional<double> seconds_per_pair;
  std::optional<double> peak_rss_mb;
  std::string           model_hash;
};

struct Predictions
{
  std::map<std::string, double>    alpha;
  std::optional<PredictionSidecar> sidecar;
};

/// CSV with header "id,alpha_pred"; the sidecar is the same path with a
/// .json extension and is optional.
Predictions
read_predictions(const fs::path & csv);

void
write_predictions(const fs::path & csv, const Predictions & predictions);

// Configuration --------------------------------------------------------------

/// Overrides cfg with the fields present in a JSON object; unknown keys throw
/// std::invalid_argument.
PosteriorConfig
load_config(const fs::path & path, PosteriorConfig cfg = {});

PosteriorConfig
config_from_json_text(const std::string & text, PosteriorConfig cfg = {});

std::string
config_to_json_text(const PosteriorConfig & cfg);

} // namespace flowreg
