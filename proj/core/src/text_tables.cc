#include "intentpipe/text_tables.h"

#include <iomanip>
#include <sstream>

#include "intentpipe/eval.h"
#include "intentpipe/model.h"

namespace intentpipe {

std::string epoch_table_header() {
  std::ostringstream out;
  out << std::left << std::setw(7) << "Epoch" << std::right << std::setw(12) << "Train loss" << std::setw(12)
      << "Valid loss" << std::setw(13) << "Valid accur" << std::setw(11) << "Elapsed" << "\n";
  out << std::string(55, '-') << "\n";
  return out.str();
}

std::string epoch_table_row(const EpochStats& s) {
  std::ostringstream out;
  out << std::left << std::setw(7) << s.epoch << std::right << std::fixed << std::setprecision(4) << std::setw(12)
      << s.train_loss;
  if (s.validation_empty) {
    out << std::setw(12) << "n/a" << std::setw(13) << "n/a";
  } else {
    out << std::setw(12) << s.validation_loss << std::setw(13) << s.validation_accuracy;
  }
  out << std::setprecision(2) << std::setw(10) << s.elapsed_seconds << "s\n";
  return out.str();
}

std::string epoch_table(const std::vector<EpochStats>& history) {
  std::string out = epoch_table_header();
  for (const auto& s : history) out += epoch_table_row(s);
  return out;
}

std::string metrics_table(const MetricsReport& r) {
  std::ostringstream out;
  std::size_t width = 8;
  for (const auto& n : r.label_names) width = std::max(width, n.size() + 2);
  auto row = [&](const std::string& name, const LabelMetrics& m, const std::string& auc) {
    out << std::left << std::setw(static_cast<int>(width)) << name << std::right << std::fixed << std::setprecision(4)
        << std::setw(10) << m.accuracy.value << std::setw(11) << m.precision.value << std::setw(9)
        << m.recall.value << std::setw(9) << m.f1.value << std::setw(9) << auc << "\n";
  };
  auto fmt_auc = [](const std::optional<double>& a) {
    if (!a) return std::string("n/a");
    std::ostringstream s;
    s << std::fixed << std::setprecision(4) << *a;
    return s.str();
  };
  out << std::left << std::setw(static_cast<int>(width)) << "Label" << std::right << std::setw(10) << "Accuracy"
      << std::setw(11) << "Precision" << std::setw(9) << "Recall" << std::setw(9) << "F1" << std::setw(9) << "AUC"
      << "\n";
  out << std::string(width + 48, '-') << "\n";
  for (std::size_t l = 0; l < r.label_names.size(); ++l) row(r.label_names[l], r.per_label[l], fmt_auc(r.auc[l]));
  out << std::string(width + 48, '-') << "\n";
  row("micro", r.micro, "");
  row("macro", r.macro, fmt_auc(r.macro_auc));
  out << std::fixed << std::setprecision(4) << "examples " << r.example_count << "  exact-set accuracy "
      << r.exact_set_accuracy << "  argmax accuracy " << r.argmax_accuracy << "  hamming accuracy "
      << r.hamming_accuracy << "\n";
  return out.str();
}

}  // namespace intentpipe
