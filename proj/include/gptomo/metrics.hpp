#pragma once

#include "gptomo/geometry.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace gptomo {

/// ||f_r - f*|| / ||f*||; throws InvalidArgument for a zero ground truth.
double e_norm(const Vector& f_r, const Vector& f_star);

struct MetricRecord {
    std::string method;
    std::string noise_case;
    int n = 0;
    int n_theta = 0;
    int n_k = 0;  // 0 for non-GP methods
    std::string family;
    unsigned long long seed = 0;
    double e_norm = 0.0;
    double seconds = 0.0;
};

/// Header of the per-run metrics CSV.
std::string metrics_csv_header();
std::string metrics_csv_row(const MetricRecord& rec);
void write_metrics_csv(std::ostream& out, const std::vector<MetricRecord>& records);
std::vector<MetricRecord> read_metrics_csv(std::istream& in);

/// Groups by (method, case, n, n_theta, n_k, family), sorted by that key, and
/// reports count, mean/min/max E_norm and mean seconds per group.
std::string summarize(const std::vector<MetricRecord>& records);

}  // namespace gptomo
