#pragma once

#include <string>
#include <vector>

namespace intentpipe {

struct EpochStats;
struct MetricsReport;

// Fixed-width console table with the columns Epoch, Train loss, Valid loss,
// Valid accur, Elapsed.
std::string epoch_table_header();
std::string epoch_table_row(const EpochStats& s);
std::string epoch_table(const std::vector<EpochStats>& history);

// Per-label rows followed by micro and macro averages.
std::string metrics_table(const MetricsReport& report);

}  // namespace intentpipe
