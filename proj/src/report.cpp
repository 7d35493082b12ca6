#include "aquagan/report.hpp"

#include <cmath>
#include <cstdio>
#include <limits>

#include "aquagan/errors.hpp"

namespace aquagan {

namespace {

std::string fixed(std::optional<double> v, int digits) {
  if (!v) return "n/a";
  if (std::isinf(*v)) return *v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, *v);
  return buf;
}

}  // namespace

MetricReport build_report(std::vector<MetricRow> rows, std::optional<ConfusionCounts> confusion) {
  if (rows.empty()) throw DataError("cannot build a report from zero images");
  MetricReport report;
  report.rows = std::move(rows);
  MetricAggregate& agg = report.aggregate;
  agg.rows = report.rows.size();
  double psnr_sum = 0.0, ssim_sum = 0.0, uiqm_sum = 0.0;
  for (const auto& r : report.rows) {
    if (is_infinite_psnr(r.psnr_db)) {
      ++agg.infinite_psnr_rows;
    } else {
      psnr_sum += r.psnr_db;
      ++agg.finite_psnr_rows;
    }
    ssim_sum += r.ssim;
    uiqm_sum += r.uiqm;
  }
  agg.mean_psnr_db = agg.finite_psnr_rows > 0 ? psnr_sum / static_cast<double>(agg.finite_psnr_rows)
                                              : std::numeric_limits<double>::infinity();
  agg.mean_ssim = ssim_sum / static_cast<double>(agg.rows);
  agg.mean_uiqm = uiqm_sum / static_cast<double>(agg.rows);
  if (confusion) {
    report.confusion = confusion;
    report.classification = confusion_metrics(*confusion);
  }
  return report;
}

std::string format_metric(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.15g", v);
  return buf;
}

void write_report_csv(const MetricReport& report, std::ostream& out) {
  out << "image,psnr_db,ssim,uiqm\n";
  for (const auto& r : report.rows) {
    out << r.image << ',' << format_metric(r.psnr_db) << ',' << format_metric(r.ssim) << ','
        << format_metric(r.uiqm) << '\n';
  }
  const auto& a = report.aggregate;
  out << "mean," << format_metric(a.mean_psnr_db) << ',' << format_metric(a.mean_ssim) << ','
      << format_metric(a.mean_uiqm) << '\n';
  out << "rows," << a.rows << ",,\n";
  out << "infinite_psnr," << a.infinite_psnr_rows << ",,\n";
}

void write_comparison_markdown(const std::vector<ComparisonRow>& rows, std::size_t image_count,
                               std::ostream& out) {
  out << "## Quantitative comparison using PSNR and SSIM (" << image_count << " images)\n\n";
  out << "| Method | PSNR (dB) | SSIM |\n|---|---|---|\n";
  for (const auto& r : rows) {
    if (!r.psnr_db && !r.ssim) continue;
    out << "| " << r.method << " | " << fixed(r.psnr_db, 2) << " | " << fixed(r.ssim, 2) << " |\n";
  }
  out << "\n## Quantitative comparison using UIQM (" << image_count << " images)\n\n";
  out << "| Method | UIQM |\n|---|---|\n";
  for (const auto& r : rows) {
    if (!r.uiqm) continue;
    out << "| " << r.method << " | " << fixed(r.uiqm, 2) << " |\n";
  }
}

void write_classification_markdown(const ConfusionCounts& counts, const std::string& dataset,
                                   std::ostream& out) {
  const ConfusionMetrics m = confusion_metrics(counts);
  out << "| " << dataset << " | Good Quality | Bad Quality |\n|---|---|---|\n";
  out << "| Precision | " << fixed(m.precision, 2) << " | " << fixed(m.negative_predictive_value, 2)
      << " |\n";
  out << "| Recall / Specificity | " << fixed(m.recall, 2) << " | " << fixed(m.specificity, 2)
      << " |\n";
  out << "| Accuracy | " << fixed(m.accuracy, 2) << " | |\n";
  out << "\nTP=" << counts.tp << " FP=" << counts.fp << " TN=" << counts.tn << " FN=" << counts.fn
      << "\n";
}

void write_classification_csv(const ConfusionCounts& counts, std::ostream& out) {
  const ConfusionMetrics m = confusion_metrics(counts);
  auto cell = [](std::optional<double> v) { return v ? format_metric(*v) : std::string("undefined"); };
  out << "tp,fp,tn,fn,precision,recall,specificity,accuracy,negative_predictive_value\n";
  out << counts.tp << ',' << counts.fp << ',' << counts.tn << ',' << counts.fn << ','
      << cell(m.precision) << ',' << cell(m.recall) << ',' << cell(m.specificity) << ','
      << cell(m.accuracy) << ',' << cell(m.negative_predictive_value) << '\n';
}

}  // namespace aquagan
