#pragma once

#include <cstddef>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "aquagan/metrics.hpp"

namespace aquagan {

struct MetricRow {
  std::string image;
  double psnr_db = 0.0;  // may be +infinity
  double ssim = 0.0;
  double uiqm = 0.0;
};

struct MetricAggregate {
  std::size_t rows = 0;
  // Mean over finite PSNR rows; +infinity when every row is infinite.
  double mean_psnr_db = 0.0;
  std::size_t finite_psnr_rows = 0;
  std::size_t infinite_psnr_rows = 0;
  double mean_ssim = 0.0;
  double mean_uiqm = 0.0;
};

struct MetricReport {
  std::vector<MetricRow> rows;
  MetricAggregate aggregate;
  std::optional<ConfusionCounts> confusion;
  std::optional<ConfusionMetrics> classification;
};

// Throws DataError for an empty row set.
MetricReport build_report(std::vector<MetricRow> rows,
                          std::optional<ConfusionCounts> confusion = std::nullopt);

// "inf" for infinite values, otherwise 15 significant digits.
std::string format_metric(double v);

// Header `image,psnr_db,ssim,uiqm`, one row per image, then footer rows
// `mean,...`, `rows,N,,` and `infinite_psnr,K,,`.
void write_report_csv(const MetricReport& report, std::ostream& out);

// One row of the comparison tables: a method name and its aggregates.
// PSNR/SSIM are absent for rows such as the reference "Goal".
struct ComparisonRow {
  std::string method;
  std::optional<double> psnr_db;
  std::optional<double> ssim;
  std::optional<double> uiqm;
};

// Markdown with a "PSNR and SSIM" table and a "UIQM" table; rows without a
// value for a table are omitted from it.
void write_comparison_markdown(const std::vector<ComparisonRow>& rows, std::size_t image_count,
                               std::ostream& out);

// Table with Good/Bad quality columns: Precision, Recall / Specificity, Accuracy.
void write_classification_markdown(const ConfusionCounts& counts, const std::string& dataset,
                                   std::ostream& out);
void write_classification_csv(const ConfusionCounts& counts, std::ostream& out);

}  // namespace aquagan
