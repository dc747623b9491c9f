#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace plm::scaling {

struct RunPoint {
    double flops = 0;
    double error = 0; // percent
    std::string group;

    bool operator==(const RunPoint&) const = default;
};

/// Err = (beta * FLOP)^alpha, fitted by least squares in log-log space.
struct PowerLawFit {
    double alpha = 0;
    double beta = 0;
    double rmse_log = 0;
    int n_points = 0;

    double predict(double flops) const;
};

/// Points not weakly dominated by any other point (lower-or-equal flops and
/// lower-or-equal error). Sorted by flops; error strictly decreases along it.
std::vector<RunPoint> pareto_frontier(std::span<const RunPoint> points);

PowerLawFit fit_power_law(std::span<const RunPoint> points);

struct ExponentRank {
    int rank = 0;
    std::string group;
    PowerLawFit fit;
};

/// Ascending alpha (steeper scaling first); ties by rmse_log, then name.
std::vector<ExponentRank> compare_exponents(const std::map<std::string, PowerLawFit>& fits);

std::vector<RunPoint> read_runpoints_csv(const std::string& path);

struct GroupResult {
    std::string group;
    std::vector<RunPoint> points;
    std::vector<RunPoint> frontier;
    std::optional<PowerLawFit> fit;
    std::string fit_error;
    std::optional<double> baseline;
};

struct ScalingOptions {
    bool fit_all_points = false;
    // Per-group horizontal reference line (e.g. a no-synthetic-data run).
    std::map<std::string, double> baselines;
};

std::vector<GroupResult> analyze(std::span<const RunPoint> points, const ScalingOptions& opts);

/// Self-contained log-log SVG: all points, frontier, fit line and baseline.
std::string render_svg(const GroupResult& group);

} // namespace plm::scaling
