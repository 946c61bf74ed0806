#include "gptomo/metrics.hpp"

#include "gptomo/error.hpp"

#include <algorithm>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <tuple>

namespace gptomo {

double e_norm(const Vector& f_r, const Vector& f_star) {
    if (f_r.size() != f_star.size()) throw InvalidArgument("e_norm: size mismatch");
    const double den = f_star.norm();
    if (!(den > 0.0)) throw InvalidArgument("e_norm: ground truth has zero norm");
    return (f_r - f_star).norm() / den;
}

std::string metrics_csv_header() { return "method,case,n,n_theta,n_k,family,seed,e_norm,seconds"; }

std::string metrics_csv_row(const MetricRecord& r) {
    char num[96];
    std::snprintf(num, sizeof num, "%llu,%.17g,%.17g", r.seed, r.e_norm, r.seconds);
    std::ostringstream os;
    os << r.method << ',' << r.noise_case << ',' << r.n << ',' << r.n_theta << ',' << r.n_k << ',' << r.family << ','
       << num;
    return os.str();
}

void write_metrics_csv(std::ostream& out, const std::vector<MetricRecord>& records) {
    out << metrics_csv_header() << '\n';
    for (const auto& r : records) out << metrics_csv_row(r) << '\n';
}

std::vector<MetricRecord> read_metrics_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != metrics_csv_header()) throw IoError("metrics csv: missing or unexpected header");
    std::vector<MetricRecord> out;
    long lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) f.push_back(cell);
        if (f.size() != 9) throw IoError("metrics csv: line " + std::to_string(lineno) + " has " + std::to_string(f.size()) + " fields");
        try {
            MetricRecord r;
            r.method = f[0];
            r.noise_case = f[1];
            r.n = std::stoi(f[2]);
            r.n_theta = std::stoi(f[3]);
            r.n_k = std::stoi(f[4]);
            r.family = f[5];
            r.seed = std::stoull(f[6]);
            r.e_norm = std::stod(f[7]);
            r.seconds = std::stod(f[8]);
            out.push_back(std::move(r));
        } catch (const std::logic_error&) {
            throw IoError("metrics csv: bad number on line " + std::to_string(lineno));
        }
    }
    return out;
}

std::string summarize(const std::vector<MetricRecord>& records) {
    using Key = std::tuple<std::string, std::string, int, int, int, std::string>;
    struct Acc {
        long count = 0;
        double sum = 0.0, lo = 0.0, hi = 0.0, seconds = 0.0;
    };
    std::map<Key, Acc> groups;
    for (const auto& r : records) {
        Acc& a = groups[Key{r.method, r.noise_case, r.n, r.n_theta, r.n_k, r.family}];
        a.lo = a.count == 0 ? r.e_norm : std::min(a.lo, r.e_norm);
        a.hi = a.count == 0 ? r.e_norm : std::max(a.hi, r.e_norm);
        ++a.count;
        a.sum += r.e_norm;
        a.seconds += r.seconds;
    }
    std::ostringstream os;
    os << "method,case,n,n_theta,n_k,family,count,e_norm_mean,e_norm_min,e_norm_max,seconds_mean\n";
    for (const auto& [k, a] : groups) {
        char num[128];
        std::snprintf(num, sizeof num, "%ld,%.17g,%.17g,%.17g,%.17g", a.count, a.sum / a.count, a.lo, a.hi, a.seconds / a.count);
        os << std::get<0>(k) << ',' << std::get<1>(k) << ',' << std::get<2>(k) << ',' << std::get<3>(k) << ','
           << std::get<4>(k) << ',' << std::get<5>(k) << ',' << num << '\n';
    }
    return os.str();
}

}  // namespace gptomo
