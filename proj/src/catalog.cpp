#include "adr/catalog.hpp"

#include <unordered_set>

#include "adr/errors.hpp"

namespace adr {

std::string RandomizerEntry::kind_name() const {
  switch (cls) {
    case RandomizerClass::Generic:
      return "generic";
    case RandomizerClass::Custom:
      return std::string(custom_kind_name(custom.kind));
    case RandomizerClass::ObservationNoise:
      return "observation_noise";
    case RandomizerClass::Rna:
      break;
  }
  return "rna";
}

Catalog::Catalog(std::vector<RandomizationDimension> dims, std::vector<RandomizerEntry> entries)
    : dims_(std::move(dims)), entries_(std::move(entries)) {
  resolve();
}

std::size_t Catalog::dim_index(std::string_view name) const {
  for (std::size_t i = 0; i < dims_.size(); ++i) {
    if (dims_[i].name == name) return i;
  }
  throw ConfigError("unknown randomization dimension '" + std::string(name) + "'");
}

const RandomizerEntry* Catalog::find_target(std::string_view target) const {
  for (const auto& e : entries_) {
    if (e.target == target) return &e;
  }
  return nullptr;
}

const RandomizerEntry* Catalog::find_class(RandomizerClass cls) const {
  for (const auto& e : entries_) {
    if (e.cls == cls) return &e;
  }
  return nullptr;
}

std::vector<double> Catalog::calibration() const {
  std::vector<double> out;
  for (const auto& d : dims_) out.push_back(d.calib_value);
  return out;
}

void Catalog::resolve() {
  std::unordered_set<std::string> names;
  for (const auto& d : dims_) {
    if (!names.insert(d.name).second) {
      throw ConfigError("duplicate randomization dimension '" + d.name + "'");
    }
  }
  std::unordered_set<std::string> entry_names, targets;
  for (auto& e : entries_) {
    if (!entry_names.insert(e.name).second) throw ConfigError("duplicate randomizer '" + e.name + "'");
    if (!targets.insert(e.target).second) {
      throw ConfigError("two randomizers write target '" + e.target + "'");
    }
    std::vector<std::size_t> idx;
    for (const auto& n : e.dim_names) idx.push_back(dim_index(n));
    switch (e.cls) {
      case RandomizerClass::Generic:
        if (idx.size() != 2) throw ConfigError("generic randomizer '" + e.name + "' needs 2 dims");
        if (!std::isfinite(e.generic.alpha)) throw ConfigError("alpha must be finite");
        e.generic.target = e.target;
        e.generic.dim_bias = idx[0];
        e.generic.dim_spread = idx[1];
        break;
      case RandomizerClass::Custom:
        e.custom.target = e.target;
        e.custom.dims = idx;
        e.custom.validate(dims_.size());
        break;
      case RandomizerClass::ObservationNoise:
        if (idx.size() != 2) throw ConfigError("observation noise needs 2 dims");
        if (e.observation.a0 < 0 || e.observation.b0 < 0 || e.observation.c0 < 0) {
          throw ConfigError("observation noise defaults must be non-negative");
        }
        e.observation.dim_corr = idx[0];
        e.observation.dim_uncorr = idx[1];
        break;
      case RandomizerClass::Rna:
        if (idx.empty() || idx.size() > 2) throw ConfigError("rna needs 1 or 2 dims");
        e.rna.alpha_dim = idx[0];
        e.rna_has_beta = idx.size() == 2;
        e.rna.beta_dim = e.rna_has_beta ? idx[1] : idx[0];
        break;
    }
  }
}

Catalog Catalog::from_json(const nlohmann::json& j) {
  try {
    std::vector<RandomizationDimension> dims;
    for (const auto& d : j.at("dims")) {
      dims.push_back({d.at("name").get<std::string>(), d.value("calib", 0.0),
                      d.value("description", std::string{})});
    }
    std::vector<RandomizerEntry> entries;
    for (const auto& r : j.value("randomizers", nlohmann::json::array())) {
      RandomizerEntry e;
      e.name = r.at("name").get<std::string>();
      e.target = r.value("target", e.name);
      e.dim_names = r.at("dims").get<std::vector<std::string>>();
      const auto kind = r.at("kind").get<std::string>();
      if (kind == "generic") {
        e.cls = RandomizerClass::Generic;
        e.generic.mode = parse_noise_mode(r.value("mode", std::string("M")));
        e.generic.alpha = r.value("alpha", 1.0);
      } else if (kind == "observation_noise") {
        e.cls = RandomizerClass::ObservationNoise;
        e.observation.a0 = r.value("a0", e.observation.a0);
        e.observation.b0 = r.value("b0", e.observation.b0);
        e.observation.c0 = r.value("c0", e.observation.c0);
        e.observation.first = r.value("first", std::size_t{0});
        if (r.contains("count")) e.observation.count = r.at("count").get<std::size_t>();
      } else if (kind == "rna") {
        e.cls = RandomizerClass::Rna;
        e.rna.hidden_layers = r.value("hidden_layers", e.rna.hidden_layers);
        e.rna.hidden_units = r.value("hidden_units", e.rna.hidden_units);
        e.rna.action_bins = r.value("bins", e.rna.action_bins);
      } else {
        e.cls = RandomizerClass::Custom;
        e.custom.kind = parse_custom_kind(kind);
        e.custom.friction_weight = r.value("weight", 1.0);
      }
      entries.push_back(std::move(e));
    }
    return Catalog(std::move(dims), std::move(entries));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed randomizer catalog: ") + e.what());
  }
}

nlohmann::json Catalog::to_json() const {
  nlohmann::json dims = nlohmann::json::array();
  for (const auto& d : dims_) {
    nlohmann::json o{{"name", d.name}, {"calib", d.calib_value}};
    if (!d.description.empty()) o["description"] = d.description;
    dims.push_back(std::move(o));
  }
  nlohmann::json rs = nlohmann::json::array();
  for (const auto& e : entries_) {
    nlohmann::json o{{"name", e.name}, {"kind", e.kind_name()}, {"target", e.target},
                     {"dims", e.dim_names}};
    switch (e.cls) {
      case RandomizerClass::Generic:
        o["mode"] = noise_mode_name(e.generic.mode);
        o["alpha"] = e.generic.alpha;
        break;
      case RandomizerClass::Custom:
        if (e.custom.kind == CustomKind::Friction) o["weight"] = e.custom.friction_weight;
        break;
      case RandomizerClass::ObservationNoise:
        o["a0"] = e.observation.a0;
        o["b0"] = e.observation.b0;
        o["c0"] = e.observation.c0;
        if (e.observation.first != 0) o["first"] = e.observation.first;
        if (e.observation.count != static_cast<std::size_t>(-1)) o["count"] = e.observation.count;
        break;
      case RandomizerClass::Rna:
        o["hidden_layers"] = e.rna.hidden_layers;
        o["hidden_units"] = e.rna.hidden_units;
        o["bins"] = e.rna.action_bins;
        break;
    }
    rs.push_back(std::move(o));
  }
  return {{"dims", dims}, {"randomizers", rs}};
}

}  // namespace adr
