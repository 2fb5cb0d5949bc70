#include "tracklab/motion/curate.hpp"

#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace tracklab {

CurationResult curate_dataset(const TrialRunner& runner,
                              const std::vector<MotionClip>& clips, int trials,
                              double threshold) {
  if (clips.empty()) throw std::invalid_argument("curate: empty clip list");
  if (trials < 1) throw std::invalid_argument("curate: trials must be >= 1");
  if (!(threshold >= 0.0 && threshold <= 1.0)) {
    throw std::invalid_argument("curate: threshold must be in [0,1]");
  }

  CurationResult result;
  result.reports.reserve(clips.size());
  for (size_t i = 0; i < clips.size(); ++i) {
    ClipReport report;
    report.name = clips[i].name;
    int successes = 0;
    double sum_kpe = 0.0, sum_jpe = 0.0;
    for (int trial = 0; trial < trials; ++trial) {
      const TrialResult r = runner(clips[i], trial);
      successes += r.success ? 1 : 0;
      sum_kpe += r.mpkpe_mm;
      sum_jpe += r.mpjpe_rad;
    }
    report.success_rate = static_cast<double>(successes) / trials;
    report.mean_mpkpe_mm = sum_kpe / trials;
    report.mean_mpjpe_rad = sum_jpe / trials;
    report.kept = report.success_rate >= threshold;
    if (report.kept) result.kept_indices.push_back(static_cast<int>(i));
    result.reports.push_back(std::move(report));
  }
  return result;
}

void write_curation_report(const CurationResult& result, const std::string& path) {
  nlohmann::json doc = nlohmann::json::array();
  for (const auto& r : result.reports) {
    doc.push_back({{"clip", r.name},
                   {"success_rate", r.success_rate},
                   {"mean_mpkpe_mm", r.mean_mpkpe_mm},
                   {"mean_mpjpe_rad", r.mean_mpjpe_rad},
                   {"kept", r.kept}});
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write curation report '" + path + "'");
  out << doc.dump(1) << "\n";
}

}  // namespace tracklab
