#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "degradelab/image.hpp"
#include "degradelab/trainer.hpp"

namespace degradelab {

struct RunSummary {
  std::string name;
  int iterations = 0;
  double l_data = 0.0;  // means over the last tenth of the run
  double l_adv = 0.0;
  double l_f = 0.0;
  std::optional<double> final_similarity;
  std::optional<double> best_similarity;
};

RunSummary summarize_log(const std::string& name, const TrainLog& log);

/// Stacked line plots, one panel per non-empty series (l_data, l_adv, l_f,
/// similarity), each autoscaled. Returns a Byte-domain image.
Image plot_log(const TrainLog& log, int panel_width = 640,
               int panel_height = 160);

/// Reads each CSV, writes <stem>.png curves plus summary.csv and summary.md
/// into out_dir. Returns the summaries in input order.
std::vector<RunSummary> render_report(
    const std::vector<std::filesystem::path>& logs,
    const std::filesystem::path& out_dir);

}  // namespace degradelab
