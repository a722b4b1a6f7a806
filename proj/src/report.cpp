#include "cltlab/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "cltlab/stats.hpp"

namespace cltlab::cli {

std::uint64_t fnv1a64(std::span<const char> bytes) {
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001B3ull;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return std::string(buf);
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return std::string(buf);
}

void ensure_directory(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) fail(ErrorKind::config, "cannot create output directory '" + dir + "': " + ec.message());
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::config, "cannot write '" + path + "'");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
}

std::string series_csv(const correlations::CorrelationSeries& s) {
  std::string csv = "lag,re,im,se,n_samples\n";
  for (std::size_t i = 0; i < s.lags.size(); ++i) {
    csv += std::to_string(s.lags[i]) + "," + fmt(s.estimates[i].real()) + "," +
           fmt(s.estimates[i].imag()) + "," + fmt(s.standard_errors[i]) + "," +
           std::to_string(s.sample_count) + "\n";
  }
  return csv;
}

Histogram make_histogram(std::span<const double> samples, std::size_t bins) {
  if (samples.empty()) fail(ErrorKind::insufficient_data, "histogram: empty sample set");
  if (bins < 2) fail(ErrorKind::domain, "histogram: need at least 2 bins");
  const auto [mn_it, mx_it] = std::minmax_element(samples.begin(), samples.end());
  double lo = *mn_it, hi = *mx_it;
  if (hi <= lo) hi = lo + 1.0; // single point: one nonzero bin
  Histogram h;
  h.edges.resize(bins + 1);
  h.counts.assign(bins, 0);
  for (std::size_t i = 0; i <= bins; ++i)
    h.edges[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(bins);
  for (double x : samples) {
    auto idx = static_cast<std::size_t>((x - lo) / (hi - lo) * static_cast<double>(bins));
    if (idx >= bins) idx = bins - 1;
    ++h.counts[idx];
  }
  return h;
}

std::string histogram_csv(const Histogram& h) {
  std::string csv = "bin_left,bin_right,count,normal_density_at_center\n";
  for (std::size_t i = 0; i < h.counts.size(); ++i) {
    const double center = 0.5 * (h.edges[i] + h.edges[i + 1]);
    csv += fmt(h.edges[i]) + "," + fmt(h.edges[i + 1]) + "," + std::to_string(h.counts[i]) + "," +
           fmt(stats::normal_pdf(center)) + "\n";
  }
  return csv;
}

RunManifest::RunManifest(std::string out_dir, std::uint64_t config_hash, std::uint64_t seed)
    : out_dir_(std::move(out_dir)), config_hash_(config_hash), seed_(seed) {
  ensure_directory(out_dir_);
}

void RunManifest::emit(const std::string& relative_path, const std::string& content) {
  const std::string full = out_dir_ + "/" + relative_path;
  write_text_file(full, content);
  OutputRecord rec;
  rec.path = relative_path;
  rec.bytes = content.size();
  rec.checksum = hex64(fnv1a64(std::span<const char>(content.data(), content.size())));
  outputs_.push_back(std::move(rec));
}

nlohmann::json RunManifest::provenance() const {
  return nlohmann::json{{"config_hash", hex64(config_hash_)},
                        {"seed", seed_},
                        {"artifact_version", artifact_version}};
}

void RunManifest::finalize() {
  nlohmann::json j;
  j["config_hash"] = hex64(config_hash_);
  j["seed"] = seed_;
  j["artifact_version"] = artifact_version;
  j["wall_seconds"] = wall_seconds_;
  j["outputs"] = nlohmann::json::array();
  for (const auto& o : outputs_)
    j["outputs"].push_back({{"path", o.path}, {"bytes", o.bytes}, {"checksum", o.checksum}});
  write_text_file(out_dir_ + "/manifest.json", j.dump(2) + "\n");
}

} // namespace cltlab::cli
