#pragma once

// Declarative randomizer catalog: the randomization dimensions of an
// environment and the randomizers that read them.
//
// JSON layout:
//   {"dims": [{"name": "...", "calib": 0.0, "description": "..."}, ...],
//    "randomizers": [{"name": "...", "kind": "...", "target": "...",
//                     "dims": ["dim name", ...], "mode": "M", "alpha": 1.0}, ...]}
//
// `kind` is "generic" (with `mode` and `alpha`), one of the custom kinds, or
// "observation_noise" (dims: correlated, uncorrelated; optional a0/b0/c0),
// or "rna" (dims: alpha[, beta]; optional hidden_layers/hidden_units/bins).

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "adr/adr_core.hpp"
#include "adr/randomizers.hpp"
#include "adr/rna.hpp"

namespace adr {

enum class RandomizerClass { Generic, Custom, ObservationNoise, Rna };

struct RandomizerEntry {
  std::string name;
  std::string target;
  RandomizerClass cls = RandomizerClass::Generic;
  std::vector<std::string> dim_names;
  GenericRandomizerSpec generic;
  CustomRandomizerSpec custom;
  ObservationNoiseSpec observation;
  RnaSpec rna;
  bool rna_has_beta = false;

  std::string kind_name() const;
};

class Catalog {
 public:
  Catalog() = default;
  Catalog(std::vector<RandomizationDimension> dims, std::vector<RandomizerEntry> entries);

  /// Throws ConfigError on unknown kinds, unknown dimension names, duplicate
  /// names or arity mismatches.
  static Catalog from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;

  const std::vector<RandomizationDimension>& dims() const noexcept { return dims_; }
  const std::vector<RandomizerEntry>& entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return dims_.size(); }

  std::size_t dim_index(std::string_view name) const;
  const RandomizerEntry* find_target(std::string_view target) const;
  const RandomizerEntry* find_class(RandomizerClass cls) const;

  std::vector<double> calibration() const;

 private:
  void resolve();

  std::vector<RandomizationDimension> dims_;
  std::vector<RandomizerEntry> entries_;
};

}  // namespace adr
