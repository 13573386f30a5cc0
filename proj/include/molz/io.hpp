#pragma once
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "molz/experiment.hpp"
#include "molz/scattering.hpp"

namespace molz {

struct SMatrixSettings {
  std::vector<double> energies;  // empty: the packet's mean energy
  IntegrationOptions integration;
};

struct ContourSettings {
  double energy = 0;  // 0: the packet's mean energy
  int panels = 16;
};

// Everything a subcommand needs. eps_list overrides experiment.eps when non-empty.
struct RunConfig {
  ExperimentConfig experiment;
  std::vector<double> eps_list;
  SMatrixSettings smatrix;
  ContourSettings contour;
};

// Both throw Error("ConfigError", ...) on schema or sanity violations.
RunConfig parse_config(const std::string& json_text);
void validate(const RunConfig& cfg);
// Canonical JSON; parse_config(config_json(c)) reproduces c.
std::string config_json(const RunConfig& cfg, int indent = 2);
std::uint64_t config_hash(const RunConfig& cfg);  // FNV-1a of the compact canonical JSON
double mean_energy(const ExperimentConfig& cfg);

std::string fmt17(double v);  // 17 significant digits

class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& header);
  void row(const std::vector<double>& values);

 private:
  std::ofstream out_;
  size_t width_;
};

}  // namespace molz
