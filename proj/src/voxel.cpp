#include "printacc/voxel.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <sstream>

#include "printacc/error.hpp"
#include "printacc/json_util.hpp"
#include "printacc/mesh_query.hpp"
#include "printacc/textio.hpp"

namespace printacc {

VoxelModel::VoxelModel(const VoxelIndex& d, double p, const Point3& o, double t)
    : dims(d), pitch(p), origin(o), default_nozzle_time_ms(t), occupancy(d[0] * d[1] * d[2], 0),
      nozzle_time_ms(d[0] * d[1] * d[2], t)
{
}

Point3 VoxelModel::center(std::size_t i, std::size_t j, std::size_t k) const
{
    return origin + pitch * Vector3(static_cast<double>(i) + 0.5, static_cast<double>(j) + 0.5,
                                    static_cast<double>(k) + 0.5);
}

std::size_t VoxelModel::count() const
{
    return static_cast<std::size_t>(std::count(occupancy.begin(), occupancy.end(), std::uint8_t{1}));
}

std::optional<std::pair<VoxelIndex, VoxelIndex>> VoxelModel::occupied_bounds() const
{
    VoxelIndex lo{dims[0], dims[1], dims[2]}, hi{0, 0, 0};
    bool any = false;
    for (std::size_t k = 0; k < dims[2]; ++k)
        for (std::size_t j = 0; j < dims[1]; ++j)
            for (std::size_t i = 0; i < dims[0]; ++i) {
                if (!occupied(i, j, k))
                    continue;
                any = true;
                const VoxelIndex v{i, j, k};
                for (int a = 0; a < 3; ++a) {
                    lo[a] = std::min(lo[a], v[a]);
                    hi[a] = std::max(hi[a], v[a]);
                }
            }
    if (!any)
        return std::nullopt;
    return std::pair{lo, hi};
}

void VoxelModel::validate() const
{
    if (dims[0] == 0 || dims[1] == 0 || dims[2] == 0)
        throw DomainError("voxel model dimensions must be positive");
    if (!(pitch > 0.0) || !std::isfinite(pitch))
        throw DomainError("voxel pitch must be positive");
    if (occupancy.size() != size() || nozzle_time_ms.size() != size())
        throw DomainError("voxel model arrays do not match its dimensions");
}

VoxelModel voxelize(const TriangleMesh& mesh, double pitch, const Point3& origin, double nozzle_time_ms)
{
    if (!(pitch > 0.0) || !std::isfinite(pitch))
        throw DomainError("voxel pitch must be positive");
    const MeshQuery query(mesh);
    const Eigen::AlignedBox3d box = mesh.bounds();

    std::array<long long, 3> lo{}, hi{};
    VoxelIndex dims{};
    // Snap tolerance in pitch units; STL vertices are float32.
    constexpr double snap = 1e-4;
    for (int a = 0; a < 3; ++a) {
        lo[a] = static_cast<long long>(std::floor((box.min()[a] - origin[a]) / pitch + snap));
        hi[a] = static_cast<long long>(std::ceil((box.max()[a] - origin[a]) / pitch - snap));
        hi[a] = std::max(hi[a], lo[a] + 1);
        dims[a] = static_cast<std::size_t>(hi[a] - lo[a]);
    }
    const Point3 model_origin =
        origin + pitch * Vector3(static_cast<double>(lo[0]), static_cast<double>(lo[1]), static_cast<double>(lo[2]));
    VoxelModel model(dims, pitch, model_origin, nozzle_time_ms);
    for (std::size_t k = 0; k < dims[2]; ++k)
        for (std::size_t j = 0; j < dims[1]; ++j)
            for (std::size_t i = 0; i < dims[0]; ++i)
                model.set(i, j, k, query.contains(model.center(i, j, k)));
    return model;
}

void CompensationPolicy::validate(double pitch) const
{
    const double strong = strong_threshold(pitch), moderate = moderate_threshold(pitch);
    if (!(moderate > 0.0) || !(strong > moderate))
        throw DomainError("compensation thresholds must satisfy strong > moderate > 0");
    if (strong_removal < 0 || moderate_removal < 0)
        throw DomainError("voxel removal counts must not be negative");
}

CompensationPolicy policy_from_json(std::string_view text)
{
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("policy json: ") + e.what());
    }
    if (!j.is_object())
        throw FormatError("policy json must be an object");
    CompensationPolicy p;
    try {
        for (const auto& [key, value] : j.items()) {
            if (key == "strong_threshold_mm")
                p.strong_threshold_mm = value.get<double>();
            else if (key == "moderate_threshold_mm")
                p.moderate_threshold_mm = value.get<double>();
            else if (key == "strong_removal")
                p.strong_removal = value.get<int>();
            else if (key == "moderate_removal")
                p.moderate_removal = value.get<int>();
            else if (key == "global_shrink")
                p.global_shrink = value.get<bool>();
            else
                throw FormatError("policy json: unknown key '" + key + "'");
        }
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("policy json: ") + e.what());
    }
    return p;
}

std::string policy_to_json(const CompensationPolicy& policy, double pitch)
{
    nlohmann::ordered_json j;
    j["strong_threshold_mm"] = json_number(policy.strong_threshold(pitch), 6);
    j["moderate_threshold_mm"] = json_number(policy.moderate_threshold(pitch), 6);
    j["strong_removal"] = policy.strong_removal;
    j["moderate_removal"] = policy.moderate_removal;
    j["global_shrink"] = policy.global_shrink;
    return j.dump(2);
}

namespace {

double finite_mean(const FaceGrid& g)
{
    double sum = 0.0;
    std::size_t n = 0;
    for (double v : g.values) {
        if (std::isfinite(v)) {
            sum += v;
            ++n;
        }
    }
    return n ? sum / static_cast<double>(n) : 0.0;
}

VoxelModel crop(const VoxelModel& in, const VoxelIndex& lo, const VoxelIndex& hi)
{
    const VoxelIndex dims{hi[0] - lo[0] + 1, hi[1] - lo[1] + 1, hi[2] - lo[2] + 1};
    const Point3 origin = in.origin + in.pitch * Vector3(static_cast<double>(lo[0]), static_cast<double>(lo[1]),
                                                         static_cast<double>(lo[2]));
    VoxelModel out(dims, in.pitch, origin, in.default_nozzle_time_ms);
    for (std::size_t k = 0; k < dims[2]; ++k)
        for (std::size_t j = 0; j < dims[1]; ++j)
            for (std::size_t i = 0; i < dims[0]; ++i) {
                const std::size_t src = in.index(i + lo[0], j + lo[1], k + lo[2]);
                out.occupancy[out.index(i, j, k)] = in.occupancy[src];
                out.nozzle_time_ms[out.index(i, j, k)] = in.nozzle_time_ms[src];
            }
    return out;
}

} // namespace

CompensationResult compensate(const VoxelModel& model, const std::array<FaceGrid, 6>& mean_maps,
                              const CompensationPolicy& policy)
{
    model.validate();
    policy.validate(model.pitch);
    const auto bounds = model.occupied_bounds();
    if (!bounds)
        throw DomainError("cannot compensate an empty voxel model");
    auto [lo, hi] = *bounds;

    // Deviation maps live on the faces of the occupied bounding box.
    const double pitch = model.pitch;
    Point3 frame_min;
    Vector3 frame_ext;
    for (int a = 0; a < 3; ++a) {
        frame_min[a] = model.origin[a] + pitch * static_cast<double>(lo[a]);
        frame_ext[a] = pitch * static_cast<double>(hi[a] - lo[a] + 1);
    }
    for (Face f : kAllFaces) {
        const FaceGrid& g = mean_maps[face_index(f)];
        const auto [ua, va] = face_plane_axes(f);
        if (g.face != f || g.values.size() != g.nu * g.nv)
            throw DomainError("deviation map " + std::to_string(face_index(f)) + " is not a " +
                              std::string(face_name(f)) + " grid");
        if (std::abs(g.extent_u - frame_ext[ua]) > 0.5 * pitch || std::abs(g.extent_v - frame_ext[va]) > 0.5 * pitch)
            throw DomainError("deviation map for face " + std::string(face_name(f)) +
                              " does not match the model's face size");
    }

    CompensationResult result;
    VoxelModel work = model;

    if (policy.global_shrink) {
        VoxelIndex keep_lo{0, 0, 0}, keep_hi{model.dims[0] - 1, model.dims[1] - 1, model.dims[2] - 1};
        for (int a = 0; a < 3; ++a) {
            if (hi[a] == lo[a])
                throw DomainError("global shrink would remove every voxel");
            const bool positive = finite_mean(mean_maps[2 * a]) >= finite_mean(mean_maps[2 * a + 1]);
            const std::size_t layer = positive ? hi[a] : lo[a];
            for (std::size_t k = 0; k < work.dims[2]; ++k)
                for (std::size_t j = 0; j < work.dims[1]; ++j)
                    for (std::size_t i = 0; i < work.dims[0]; ++i) {
                        const VoxelIndex v{i, j, k};
                        if (v[a] == layer && work.occupied(i, j, k)) {
                            work.set(i, j, k, false);
                            ++result.removed_by_shrink;
                        }
                    }
            if (positive) {
                if (keep_hi[a] == hi[a])
                    --keep_hi[a];
                --hi[a];
            } else {
                if (keep_lo[a] == lo[a])
                    ++keep_lo[a];
                ++lo[a];
            }
        }
        work = crop(work, keep_lo, keep_hi);
    }

    const double strong = policy.strong_threshold(pitch), moderate = policy.moderate_threshold(pitch);
    std::vector<std::uint8_t> remove(work.size(), 0);
    for (Face f : kAllFaces) {
        const FaceGrid& g = mean_maps[face_index(f)];
        const int a = face_axis(f);
        const auto [ua, va] = face_plane_axes(f);
        const std::size_t nu = work.dims[ua], nv = work.dims[va];

        // Bucket the map nodes into the voxel columns under them.
        std::vector<double> sum(nu * nv, 0.0);
        std::vector<std::size_t> n(nu * nv, 0);
        for (std::size_t j = 0; j < g.nv; ++j) {
            for (std::size_t i = 0; i < g.nu; ++i) {
                const double v = g.at(i, j);
                if (!std::isfinite(v))
                    continue;
                const double cu = std::floor((frame_min[ua] + g.node_u(i) - work.origin[ua]) / pitch);
                const double cv = std::floor((frame_min[va] + g.node_v(j) - work.origin[va]) / pitch);
                if (cu < 0 || cv < 0 || cu >= static_cast<double>(nu) || cv >= static_cast<double>(nv))
                    continue;
                const std::size_t c = static_cast<std::size_t>(cv) * nu + static_cast<std::size_t>(cu);
                sum[c] += v;
                ++n[c];
            }
        }

        for (std::size_t cv = 0; cv < nv; ++cv) {
            for (std::size_t cu = 0; cu < nu; ++cu) {
                const std::size_t c = cv * nu + cu;
                if (!n[c])
                    continue;
                const double mean = sum[c] / static_cast<double>(n[c]);
                const int depth = mean >= strong ? policy.strong_removal : mean >= moderate ? policy.moderate_removal : 0;
                int taken = 0;
                for (std::size_t s = 0; s < work.dims[a] && taken < depth; ++s) {
                    VoxelIndex v{};
                    v[ua] = cu;
                    v[va] = cv;
                    v[a] = face_is_positive(f) ? work.dims[a] - 1 - s : s;
                    if (!work.occupied(v[0], v[1], v[2]))
                        continue;
                    remove[work.index(v[0], v[1], v[2])] = 1;
                    ++taken;
                }
            }
        }
    }
    for (std::size_t q = 0; q < work.size(); ++q) {
        if (remove[q] && work.occupancy[q]) {
            work.occupancy[q] = 0;
            ++result.removed_locally;
        }
    }
    if (work.count() == 0)
        throw DomainError("compensation would remove every voxel");

    result.six_connected = is_six_connected(work);
    if (!result.six_connected && is_six_connected(model))
        result.warnings.push_back("compensated model is no longer 6-connected");
    result.model = std::move(work);
    return result;
}

bool is_six_connected(const VoxelModel& model)
{
    const std::size_t total = model.count();
    if (total == 0)
        return true;
    std::vector<std::uint8_t> seen(model.size(), 0);
    std::deque<VoxelIndex> queue;
    for (std::size_t q = 0; q < model.size(); ++q) {
        if (model.occupancy[q]) {
            const std::size_t i = q % model.dims[0], j = (q / model.dims[0]) % model.dims[1];
            const std::size_t k = q / (model.dims[0] * model.dims[1]);
            queue.push_back({i, j, k});
            seen[q] = 1;
            break;
        }
    }
    std::size_t reached = 0;
    while (!queue.empty()) {
        const VoxelIndex v = queue.front();
        queue.pop_front();
        ++reached;
        for (int a = 0; a < 3; ++a) {
            for (int step : {-1, 1}) {
                if ((step < 0 && v[a] == 0) || (step > 0 && v[a] + 1 >= model.dims[a]))
                    continue;
                VoxelIndex w = v;
                w[a] = step < 0 ? v[a] - 1 : v[a] + 1;
                const std::size_t q = model.index(w[0], w[1], w[2]);
                if (model.occupancy[q] && !seen[q]) {
                    seen[q] = 1;
                    queue.push_back(w);
                }
            }
        }
    }
    return reached == total;
}

std::string export_instructions(const VoxelModel& model, int precision)
{
    model.validate();
    if (model.count() == 0)
        throw DomainError("cannot export instructions for an empty voxel model");
    std::string out = "# voxel print instructions\n";
    out += "# dims " + std::to_string(model.dims[0]) + " " + std::to_string(model.dims[1]) + " " +
           std::to_string(model.dims[2]) + "\n";
    out += "# pitch_mm " + format_fixed(model.pitch, 6) + "\n";
    out += "# origin_mm " + format_fixed(model.origin.x(), 6) + " " + format_fixed(model.origin.y(), 6) + " " +
           format_fixed(model.origin.z(), 6) + "\n";
    out += "# nozzle_time_ms " + format_fixed(model.default_nozzle_time_ms, precision) + "\n";
    for (std::size_t k = 0; k < model.dims[2]; ++k) {
        for (std::size_t j = 0; j < model.dims[1]; ++j) {
            // Nozzles grouped by their formatted time so equal times share a line.
            std::map<double, std::vector<std::size_t>> by_time;
            for (std::size_t i = 0; i < model.dims[0]; ++i) {
                if (model.occupied(i, j, k))
                    by_time[round_decimals(model.nozzle_time_ms[model.index(i, j, k)], precision)].push_back(i);
            }
            for (const auto& [t, nozzles] : by_time) {
                out += "layer " + std::to_string(k) + "; row " + std::to_string(j) + "; nozzles";
                for (std::size_t i : nozzles)
                    out += " " + std::to_string(i);
                out += "; nozzle_time_ms " + format_fixed(t, precision) + "\n";
            }
        }
    }
    return out;
}

namespace {

std::size_t parse_index(std::string_view s, const std::string& where)
{
    const double v = parse_number(s, where);
    if (!(v >= 0) || v != std::floor(v) || v > 1e12)
        throw FormatError(where + ": expected a non-negative integer, got '" + std::string(s) + "'");
    return static_cast<std::size_t>(v);
}

std::vector<std::string> words(std::string_view s)
{
    std::vector<std::string> out;
    std::istringstream in{std::string(s)};
    for (std::string w; in >> w;)
        out.push_back(w);
    return out;
}

} // namespace

VoxelModel parse_instructions(std::string_view text)
{
    const auto lines = split_lines(text);
    std::optional<VoxelIndex> dims;
    double pitch = kDefaultPitch, default_time = kDefaultNozzleTime;
    Point3 origin = Point3::Zero();
    VoxelModel model;
    for (std::size_t n = 0; n < lines.size(); ++n) {
        const std::string where = "instructions line " + std::to_string(n + 1);
        const auto& line = lines[n];
        if (line.front() == '#') {
            const auto w = words(std::string_view(line).substr(1));
            if (w.size() == 4 && w[0] == "dims")
                dims = VoxelIndex{parse_index(w[1], where), parse_index(w[2], where), parse_index(w[3], where)};
            else if (w.size() == 2 && w[0] == "pitch_mm")
                pitch = parse_number(w[1], where);
            else if (w.size() == 4 && w[0] == "origin_mm")
                origin = Point3(parse_number(w[1], where), parse_number(w[2], where), parse_number(w[3], where));
            else if (w.size() == 2 && w[0] == "nozzle_time_ms")
                default_time = parse_number(w[1], where);
            continue;
        }
        if (!dims)
            throw FormatError(where + ": instruction before the '# dims' header");
        if (model.occupancy.empty()) {
            model = VoxelModel(*dims, pitch, origin, default_time);
            model.validate();
        }
        const auto parts = split_fields(line, ';');
        if (parts.size() != 4)
            throw FormatError(where + ": expected 'layer k; row j; nozzles ...; nozzle_time_ms t'");
        const auto layer = words(parts[0]), row = words(parts[1]), nozzles = words(parts[2]), time = words(parts[3]);
        if (layer.size() != 2 || layer[0] != "layer" || row.size() != 2 || row[0] != "row" || nozzles.empty() ||
            nozzles[0] != "nozzles" || time.size() != 2 || time[0] != "nozzle_time_ms")
            throw FormatError(where + ": expected 'layer k; row j; nozzles ...; nozzle_time_ms t'");
        const std::size_t k = parse_index(layer[1], where), j = parse_index(row[1], where);
        const double t = parse_number(time[1], where);
        if (k >= model.dims[2] || j >= model.dims[1])
            throw FormatError(where + ": layer or row outside the model");
        for (std::size_t w = 1; w < nozzles.size(); ++w) {
            const std::size_t i = parse_index(nozzles[w], where);
            if (i >= model.dims[0])
                throw FormatError(where + ": nozzle " + std::to_string(i) + " outside the model");
            model.set(i, j, k, true);
            model.nozzle_time_ms[model.index(i, j, k)] = t;
        }
    }
    if (model.occupancy.empty())
        throw FormatError("instructions contain no voxels");
    return model;
}

std::string voxel_model_to_json(const VoxelModel& model, int precision)
{
    model.validate();
    std::string rle;
    for (std::size_t q = 0; q < model.size();) {
        std::size_t run = 1;
        while (q + run < model.size() && model.occupancy[q + run] == model.occupancy[q])
            ++run;
        if (!rle.empty())
            rle += ',';
        rle += std::to_string(run) + ":" + std::to_string(static_cast<int>(model.occupancy[q]));
        q += run;
    }
    nlohmann::ordered_json j;
    j["dims"] = {model.dims[0], model.dims[1], model.dims[2]};
    j["pitch_mm"] = json_number(model.pitch, precision);
    j["origin_mm"] = {json_number(model.origin.x(), precision), json_number(model.origin.y(), precision),
                      json_number(model.origin.z(), precision)};
    j["nozzle_time_ms"] = json_number(model.default_nozzle_time_ms, precision);
    j["occupied"] = model.count();
    j["occupancy"] = rle;
    auto overrides = nlohmann::ordered_json::array();
    for (std::size_t q = 0; q < model.size(); ++q) {
        if (model.occupancy[q] && model.nozzle_time_ms[q] != model.default_nozzle_time_ms)
            overrides.push_back({q, json_number(model.nozzle_time_ms[q], precision)});
    }
    j["nozzle_time_overrides"] = overrides;
    return j.dump(2);
}

VoxelModel voxel_model_from_json(std::string_view text)
{
    try {
        const auto j = nlohmann::json::parse(text);
        const auto d = j.at("dims").get<std::vector<std::size_t>>();
        const auto o = j.at("origin_mm").get<std::vector<double>>();
        if (d.size() != 3 || o.size() != 3)
            throw FormatError("voxel json: dims and origin_mm need three entries");
        VoxelModel model({d[0], d[1], d[2]}, j.at("pitch_mm").get<double>(), Point3(o[0], o[1], o[2]),
                         j.at("nozzle_time_ms").get<double>());
        model.validate();
        std::size_t q = 0;
        for (const auto& pair : split_fields(j.at("occupancy").get<std::string>(), ',')) {
            const auto kv = split_fields(pair, ':');
            if (kv.size() != 2 || (kv[1] != "0" && kv[1] != "1"))
                throw FormatError("voxel json: bad occupancy run '" + pair + "'");
            const std::size_t run = parse_index(kv[0], "voxel json occupancy");
            if (q + run > model.size())
                throw FormatError("voxel json: occupancy runs exceed the model size");
            std::fill_n(model.occupancy.begin() + static_cast<std::ptrdiff_t>(q), run, kv[1] == "1" ? 1 : 0);
            q += run;
        }
        if (q != model.size())
            throw FormatError("voxel json: occupancy runs cover " + std::to_string(q) + " of " +
                              std::to_string(model.size()) + " voxels");
        if (j.contains("nozzle_time_overrides")) {
            for (const auto& e : j.at("nozzle_time_overrides")) {
                const auto idx = e.at(0).get<std::size_t>();
                if (idx >= model.size())
                    throw FormatError("voxel json: nozzle time override outside the model");
                model.nozzle_time_ms[idx] = e.at(1).get<double>();
            }
        }
        return model;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("voxel json: ") + e.what());
    }
}

} // namespace printacc
