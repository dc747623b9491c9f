#include "plm/scaling.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "plm/error.hpp"

namespace plm::scaling {
namespace {

void check_point(const RunPoint& p)
{
    if (!(p.flops > 0) || !std::isfinite(p.flops))
        throw InvalidInput("run point flops must be positive and finite");
    if (!(p.error > 0) || !std::isfinite(p.error))
        throw InvalidInput("run point error must be positive and finite");
}

std::string num(double v)
{
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 6);
    return std::string(buf, r.ptr);
}

std::string xml_escape(std::string_view s)
{
    std::string out;
    for (char c : s) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        default: out += c;
        }
    }
    return out;
}

} // namespace

double PowerLawFit::predict(double flops) const
{
    return std::pow(beta * flops, alpha);
}

std::vector<RunPoint> pareto_frontier(std::span<const RunPoint> points)
{
    for (const auto& p : points)
        check_point(p);
    std::vector<RunPoint> sorted(points.begin(), points.end());
    std::stable_sort(sorted.begin(), sorted.end(), [](const RunPoint& a, const RunPoint& b) {
        if (a.flops != b.flops)
            return a.flops < b.flops;
        return a.error < b.error;
    });
    std::vector<RunPoint> out;
    for (const auto& p : sorted)
        if (out.empty() || p.error < out.back().error)
            out.push_back(p);
    return out;
}

PowerLawFit fit_power_law(std::span<const RunPoint> points)
{
    for (const auto& p : points)
        check_point(p);
    std::vector<double> xs;
    for (const auto& p : points)
        xs.push_back(p.flops);
    std::sort(xs.begin(), xs.end());
    if (std::unique(xs.begin(), xs.end()) - xs.begin() < 2)
        throw InvalidInput("power-law fit needs at least 2 distinct flops values");

    // Centered sums keep the normal equations well conditioned at 1e20 flops.
    const double n = static_cast<double>(points.size());
    double mx = 0;
    double my = 0;
    for (const auto& p : points) {
        mx += std::log(p.flops);
        my += std::log(p.error);
    }
    mx /= n;
    my /= n;
    double sxx = 0;
    double sxy = 0;
    for (const auto& p : points) {
        const double dx = std::log(p.flops) - mx;
        sxx += dx * dx;
        sxy += dx * (std::log(p.error) - my);
    }
    const double slope = sxy / sxx;
    const double intercept = my - slope * mx;
    if (std::abs(slope) < 1e-12)
        throw DegenerateFit("fitted exponent is zero; beta is undefined");

    double ss = 0;
    for (const auto& p : points) {
        const double r = std::log(p.error) - (intercept + slope * std::log(p.flops));
        ss += r * r;
    }
    PowerLawFit fit;
    fit.alpha = slope;
    fit.beta = std::exp(intercept / slope);
    fit.rmse_log = std::sqrt(ss / n);
    fit.n_points = static_cast<int>(points.size());
    return fit;
}

std::vector<ExponentRank> compare_exponents(const std::map<std::string, PowerLawFit>& fits)
{
    std::vector<ExponentRank> out;
    for (const auto& [g, f] : fits)
        out.push_back({0, g, f});
    std::stable_sort(out.begin(), out.end(), [](const ExponentRank& a, const ExponentRank& b) {
        if (a.fit.alpha != b.fit.alpha)
            return a.fit.alpha < b.fit.alpha;
        if (a.fit.rmse_log != b.fit.rmse_log)
            return a.fit.rmse_log < b.fit.rmse_log;
        return a.group < b.group;
    });
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i].rank = static_cast<int>(i) + 1;
    return out;
}

std::vector<RunPoint> read_runpoints_csv(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open " + path);
    std::vector<RunPoint> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty())
            continue;
        std::vector<std::string> cols;
        std::stringstream ss(line);
        std::string c;
        while (std::getline(ss, c, ','))
            cols.push_back(c);
        if (lineno == 1 && !cols.empty() && cols[0] == "flops")
            continue;
        if (cols.size() != 3)
            throw InvalidInput(path + ":" + std::to_string(lineno) + ": expected 3 columns flops,error,group");
        RunPoint p;
        try {
            std::size_t used = 0;
            p.flops = std::stod(cols[0], &used);
            if (used != cols[0].size())
                throw std::invalid_argument("trailing");
            p.error = std::stod(cols[1], &used);
            if (used != cols[1].size())
                throw std::invalid_argument("trailing");
        } catch (const std::logic_error&) {
            throw InvalidInput(path + ":" + std::to_string(lineno) + ": non-numeric flops or error");
        }
        p.group = cols[2];
        try {
            check_point(p);
        } catch (const InvalidInput& e) {
            throw InvalidInput(path + ":" + std::to_string(lineno) + ": " + e.what());
        }
        out.push_back(std::move(p));
    }
    return out;
}

std::vector<GroupResult> analyze(std::span<const RunPoint> points, const ScalingOptions& opts)
{
    std::map<std::string, GroupResult> groups;
    for (const auto& p : points) {
        auto& g = groups[p.group];
        g.group = p.group;
        g.points.push_back(p);
    }
    std::vector<GroupResult> out;
    for (auto& [name, g] : groups) {
        g.frontier = pareto_frontier(g.points);
        try {
            g.fit = fit_power_law(opts.fit_all_points ? g.points : g.frontier);
        } catch (const Error& e) {
            g.fit_error = e.what();
        }
        if (auto it = opts.baselines.find(name); it != opts.baselines.end())
            g.baseline = it->second;
        out.push_back(std::move(g));
    }
    return out;
}

std::string render_svg(const GroupResult& g)
{
    constexpr double W = 640, H = 420, L = 70, R = 20, T = 40, B = 50;
    double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
    for (const auto& p : g.points) {
        xmin = std::min(xmin, std::log10(p.flops));
        xmax = std::max(xmax, std::log10(p.flops));
        ymin = std::min(ymin, std::log10(p.error));
        ymax = std::max(ymax, std::log10(p.error));
    }
    if (g.baseline && *g.baseline > 0) {
        ymin = std::min(ymin, std::log10(*g.baseline));
        ymax = std::max(ymax, std::log10(*g.baseline));
    }
    if (g.points.empty()) {
        xmin = ymin = 0;
        xmax = ymax = 1;
    }
    if (xmax - xmin < 1e-9) {
        xmin -= 0.5;
        xmax += 0.5;
    }
    if (ymax - ymin < 1e-9) {
        ymin -= 0.05;
        ymax += 0.05;
    }
    const double padx = 0.05 * (xmax - xmin), pady = 0.08 * (ymax - ymin);
    xmin -= padx;
    xmax += padx;
    ymin -= pady;
    ymax += pady;
    auto sx = [&](double lx) { return L + (lx - xmin) / (xmax - xmin) * (W - L - R); };
    auto sy = [&](double ly) { return H - B - (ly - ymin) / (ymax - ymin) * (H - T - B); };

    std::ostringstream o;
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 "
      << W << ' ' << H << "\">\n";
    o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    o << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"15\">"
      << xml_escape(g.group);
    if (g.fit)
        o << " (alpha = " << num(g.fit->alpha) << ")";
    o << "</text>\n";
    o << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B
      << "\" stroke=\"black\"/>\n";
    o << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
    for (int d = static_cast<int>(std::ceil(xmin)); d <= static_cast<int>(std::floor(xmax)); ++d)
        o << "<text x=\"" << num(sx(d)) << "\" y=\"" << H - B + 18
          << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">1e" << d << "</text>\n";
    o << "<text x=\"" << W / 2 << "\" y=\"" << H - 10
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">training FLOPs (log)</text>\n";
    o << "<text x=\"16\" y=\"" << H / 2 << "\" transform=\"rotate(-90 16 " << H / 2
      << ")\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">error % (log)</text>\n";
    o << "<text x=\"" << L - 6 << "\" y=\"" << num(sy(ymin + pady)) << "\" text-anchor=\"end\" font-family=\"sans-serif\" "
      << "font-size=\"11\">" << num(std::pow(10.0, ymin + pady)) << "</text>\n";
    o << "<text x=\"" << L - 6 << "\" y=\"" << num(sy(ymax - pady)) << "\" text-anchor=\"end\" font-family=\"sans-serif\" "
      << "font-size=\"11\">" << num(std::pow(10.0, ymax - pady)) << "</text>\n";

    if (g.baseline && *g.baseline > 0) {
        const double y = sy(std::log10(*g.baseline));
        o << "<line x1=\"" << L << "\" y1=\"" << num(y) << "\" x2=\"" << W - R << "\" y2=\"" << num(y)
          << "\" stroke=\"gray\" stroke-dasharray=\"6 4\"/>\n";
    }
    for (const auto& p : g.points)
        o << "<circle cx=\"" << num(sx(std::log10(p.flops))) << "\" cy=\"" << num(sy(std::log10(p.error)))
          << "\" r=\"3\" fill=\"#9bb7d4\"/>\n";
    for (const auto& p : g.frontier)
        o << "<circle cx=\"" << num(sx(std::log10(p.flops))) << "\" cy=\"" << num(sy(std::log10(p.error)))
          << "\" r=\"4.5\" fill=\"#1f4e8c\"/>\n";
    if (g.fit) {
        const double x0 = xmin + padx, x1 = xmax - padx;
        const double y0 = std::log10(g.fit->predict(std::pow(10.0, x0)));
        const double y1 = std::log10(g.fit->predict(std::pow(10.0, x1)));
        o << "<line x1=\"" << num(sx(x0)) << "\" y1=\"" << num(sy(y0)) << "\" x2=\"" << num(sx(x1)) << "\" y2=\""
          << num(sy(y1)) << "\" stroke=\"#c0392b\" stroke-width=\"2\"/>\n";
    }
    o << "</svg>\n";
    return o.str();
}

} // namespace plm::scaling
