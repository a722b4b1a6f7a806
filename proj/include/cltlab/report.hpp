#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "cltlab/correlations.hpp"
#include "cltlab/error.hpp"

namespace cltlab::cli {

inline constexpr const char* artifact_version = "0.1.0";

std::uint64_t fnv1a64(std::span<const char> bytes);
std::string hex64(std::uint64_t v);

// All numeric text output goes through this (%.17g): enough digits to round
// trip, identical across reruns.
std::string fmt(double v);

void ensure_directory(const std::string& dir);
void write_text_file(const std::string& path, const std::string& content);

// Series CSV: lag,re,im,se,n_samples.
std::string series_csv(const correlations::CorrelationSeries& s);

struct Histogram {
  std::vector<double> edges;        // bins+1 edges
  std::vector<std::size_t> counts;
};

// bins >= 2, samples nonempty; uniform bins over [min, max].
Histogram make_histogram(std::span<const double> samples, std::size_t bins);

// CSV: bin_left,bin_right,count,normal_density_at_center.
std::string histogram_csv(const Histogram& h);

struct OutputRecord {
  std::string path;      // relative to the output directory
  std::size_t bytes = 0;
  std::string checksum;  // fnv1a64 hex of the file content
};

// Collects outputs as they are written and emits manifest.json at the end.
class RunManifest {
public:
  RunManifest(std::string out_dir, std::uint64_t config_hash, std::uint64_t seed);

  // Writes content under the run directory and records its checksum.
  void emit(const std::string& relative_path, const std::string& content);
  void set_wall_seconds(double s) { wall_seconds_ = s; }
  void finalize(); // writes manifest.json (not itself checksummed)

  const std::vector<OutputRecord>& outputs() const { return outputs_; }
  const std::string& directory() const { return out_dir_; }
  nlohmann::json provenance() const; // {config_hash, seed, version}

private:
  std::string out_dir_;
  std::uint64_t config_hash_ = 0;
  std::uint64_t seed_ = 0;
  double wall_seconds_ = 0.0;
  std::vector<OutputRecord> outputs_;
};

} // namespace cltlab::cli
