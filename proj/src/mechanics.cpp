#include "printacc/mechanics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "printacc/error.hpp"
#include "printacc/json_util.hpp"
#include "printacc/textio.hpp"

namespace printacc {

void BendingSetup::validate() const
{
    if (!(span_mm > 0.0) || !(width_mm > 0.0) || !(height_mm > 0.0))
        throw DomainError("bending span, width and height must be positive");
}

StressStrainCurve bending_stress_strain(const LoadRecord& record, const BendingSetup& setup)
{
    setup.validate();
    const double stress_factor = 3.0 * setup.span_mm / (2.0 * setup.width_mm * setup.height_mm * setup.height_mm);
    const double strain_factor = 6.0 * setup.height_mm / (setup.span_mm * setup.span_mm);
    StressStrainCurve c;
    c.strain.reserve(record.samples.size());
    c.stress.reserve(record.samples.size());
    for (const auto& s : record.samples) {
        c.stress.push_back(stress_factor * s.force_n);
        c.strain.push_back(strain_factor * s.displacement_mm);
    }
    return c;
}

StressStrainCurve compression_stress_strain(const LoadRecord& record, double area_mm2, double height_mm)
{
    if (!(area_mm2 > 0.0) || !(height_mm > 0.0))
        throw DomainError("compression area and height must be positive");
    if (record.samples.empty())
        throw DomainError("compression record has no samples");
    StressStrainCurve c;
    for (const auto& s : record.samples) {
        c.stress.push_back(s.force_n / area_mm2);
        c.strain.push_back(s.displacement_mm / height_mm);
    }
    return c;
}

StressStrainCurve zero_offset(const StressStrainCurve& curve)
{
    StressStrainCurve out = curve;
    if (out.empty())
        return out;
    const double e0 = curve.strain.front(), s0 = curve.stress.front();
    for (auto& e : out.strain)
        e -= e0;
    for (auto& s : out.stress)
        s -= s0;
    return out;
}

LineFit fit_line(std::span<const double> x, std::span<const double> y)
{
    LineFit f;
    const std::size_t n = x.size();
    if (n != y.size() || n < 2)
        return f;
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = x[i] - mx, dy = y[i] - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0)
        return f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    f.r_squared = std::clamp(sxy * sxy / (sxx * syy), 0.0, 1.0);
    f.defined = true;
    return f;
}

ElasticFit fit_young_modulus(const StressStrainCurve& curve, const ModulusFitOptions& options)
{
    const std::size_t n = curve.size();
    const std::size_t w = options.window_len;
    if (curve.stress.size() != n)
        throw DomainError("strain and stress arrays differ in length");
    if (w < 2 || options.stride < 1)
        throw DomainError("modulus window needs at least two points and a positive stride");
    if (n < w)
        throw DomainError("curve has " + std::to_string(n) + " points, fewer than the window of " + std::to_string(w));

    ElasticFit best;
    best.window_len = w;
    const auto peak = std::max_element(curve.stress.begin(), curve.stress.end());
    best.peak_index = static_cast<std::size_t>(peak - curve.stress.begin());
    best.peak_stress_mpa = *peak;
    if (best.peak_index + 1 < w)
        throw DomainError("no full window fits before the stress peak");

    struct Candidate {
        std::size_t start;
        LineFit fit;
    };
    std::vector<Candidate> candidates;
    const std::span<const double> strain(curve.strain), stress(curve.stress);
    for (std::size_t s = 0; s + w <= best.peak_index + 1; s += options.stride) {
        const LineFit f = fit_line(strain.subspan(s, w), stress.subspan(s, w));
        if (f.defined)
            candidates.push_back({s, f});
    }
    if (candidates.empty())
        throw DomainError("stress is constant in every window; R² is undefined");

    double steepest = -std::numeric_limits<double>::infinity();
    for (const auto& c : candidates)
        steepest = std::max(steepest, c.fit.slope);
    if (!(steepest > 0.0))
        throw DomainError("no window has a positive slope");

    const Candidate* winner = nullptr;
    for (const auto& c : candidates) {
        if (c.fit.slope < options.slope_floor * steepest)
            continue;
        if (!winner || c.fit.r_squared > winner->fit.r_squared)
            winner = &c;
    }
    best.young_modulus_mpa = winner->fit.slope;
    best.intercept_mpa = winner->fit.intercept;
    best.r_squared = winner->fit.r_squared;
    best.window_start = winner->start;
    return best;
}

std::vector<double> moving_average(std::span<const double> values, std::size_t window)
{
    if (window < 1)
        throw DomainError("moving average window must be at least 1");
    const std::size_t left = (window - 1) / 2;
    const std::size_t right = window / 2;
    std::vector<double> out(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        const std::size_t lo = i >= left ? i - left : 0;
        const std::size_t hi = std::min(values.size() - 1, i + right);
        double sum = 0.0;
        for (std::size_t k = lo; k <= hi; ++k)
            sum += values[k];
        out[i] = sum / static_cast<double>(hi - lo + 1);
    }
    return out;
}

namespace {

// First two numeric columns of each data line after the header block.
std::vector<std::pair<double, double>> read_two_columns(std::string_view text, const CurveFileFormat& format)
{
    std::vector<std::pair<double, double>> rows;
    std::size_t pos = 0, line_no = 0;
    while (pos < text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos)
            end = text.size();
        std::string_view line = text.substr(pos, end - pos);
        pos = end + 1;
        if (++line_no <= format.skip_lines)
            continue;
        if (line.find_first_not_of(" \t\r") == std::string_view::npos)
            continue;
        auto fields = split_fields(line, format.separator);
        fields.erase(std::remove(fields.begin(), fields.end(), std::string()), fields.end());
        if (fields.size() < 2)
            throw FormatError("curve file line " + std::to_string(line_no) + ": expected two columns");
        for (auto* f : {&fields[0], &fields[1]}) {
            // Decimal commas from localized exports.
            if (format.separator != ',' && f->find(',') != std::string::npos && f->find('.') == std::string::npos)
                std::replace(f->begin(), f->end(), ',', '.');
        }
        const std::string where = "curve file line " + std::to_string(line_no);
        rows.emplace_back(parse_number(fields[0], where), parse_number(fields[1], where));
        if (!std::isfinite(rows.back().first) || !std::isfinite(rows.back().second))
            throw FormatError(where + ": non-finite value");
    }
    if (rows.empty())
        throw FormatError("curve file has no data after the header");
    return rows;
}

} // namespace

StressStrainCurve parse_curve_file(std::string_view text, const CurveFileFormat& format)
{
    if (format.columns != CurveColumns::StrainStress)
        throw DomainError("parse_curve_file expects a strain/stress file");
    StressStrainCurve c;
    for (const auto& [e, s] : read_two_columns(text, format)) {
        c.strain.push_back(format.strain_in_percent ? e / 100.0 : e);
        c.stress.push_back(s);
    }
    return c;
}

LoadRecord parse_load_file(std::string_view text, const CurveFileFormat& format)
{
    LoadRecord r;
    for (const auto& [d, f] : read_two_columns(text, format))
        r.samples.push_back({d, f});
    return r;
}

std::string elastic_fit_to_json(const ElasticFit& fit, int precision)
{
    nlohmann::ordered_json j;
    j["E_MPa"] = json_number(fit.young_modulus_mpa, precision);
    j["R2"] = json_number(fit.r_squared, 6);
    j["sigma_max_MPa"] = json_number(fit.peak_stress_mpa, precision);
    j["window"] = {{"start", fit.window_start}, {"length", fit.window_len}};
    j["peak_index"] = fit.peak_index;
    return j.dump(2);
}

std::vector<GroupSummary> summarize_by_nozzle_time(const std::vector<SpecimenFit>& fits)
{
    std::map<double, std::vector<const SpecimenFit*>> groups;
    for (const auto& f : fits)
        groups[f.nozzle_time_ms].push_back(&f);

    auto mean_std = [](const std::vector<double>& v) {
        double m = 0.0;
        for (double x : v)
            m += x;
        m /= static_cast<double>(v.size());
        double sq = 0.0;
        for (double x : v)
            sq += (x - m) * (x - m);
        const double s = v.size() > 1 ? std::sqrt(sq / static_cast<double>(v.size() - 1))
                                      : std::numeric_limits<double>::quiet_NaN();
        return std::pair{m, s};
    };

    std::vector<GroupSummary> out;
    for (const auto& [t, members] : groups) {
        std::vector<double> e, s;
        for (const auto* m : members) {
            e.push_back(m->fit.young_modulus_mpa);
            s.push_back(m->fit.peak_stress_mpa);
        }
        GroupSummary g;
        g.nozzle_time_ms = t;
        g.count = members.size();
        std::tie(g.e_mean, g.e_std) = mean_std(e);
        std::tie(g.sigma_mean, g.sigma_std) = mean_std(s);
        out.push_back(g);
    }
    return out;
}

std::string group_summary_to_csv(const std::vector<GroupSummary>& groups, int precision)
{
    std::string out = "nozzle_time_ms,count,E_mean_MPa,E_std_MPa,sigma_max_mean_MPa,sigma_max_std_MPa\n";
    for (const auto& g : groups) {
        out += format_fixed(g.nozzle_time_ms, precision) + "," + std::to_string(g.count) + "," +
               format_fixed(g.e_mean, precision) + "," + format_fixed(g.e_std, precision) + "," +
               format_fixed(g.sigma_mean, precision) + "," + format_fixed(g.sigma_std, precision) + "\n";
    }
    return out;
}

} // namespace printacc
