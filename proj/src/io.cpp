#include "voroperc/io.hpp"

#include <charconv>
#include <cstdio>
#include <filesystem>

#include <nlohmann/json.hpp>

#include "voroperc/geometry.hpp"

namespace voroperc {

using json = nlohmann::ordered_json;

std::string fmt_double(double x) {
    char buf[32];
    auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), x);
    (void)ec;
    return std::string(buf, p);
}

ResultRow ResultRow::from(const std::string& estimator, const std::string& params,
                          const MCEstimate& e) {
    ResultRow r;
    r.estimator = estimator;
    r.params_json = params;
    r.value = e.value;
    r.stderr_ = e.stderr_;
    r.n_effective = e.n_effective;
    r.n_discarded = e.n_discarded;
    r.seed = e.seed;
    return r;
}

std::string format_csv(const std::vector<ResultRow>& rows) {
    std::string out = kCsvHeader;
    out += '\n';
    for (const auto& r : rows) {
        out += r.estimator;
        out += ",\"";
        for (char c : r.params_json) {
            if (c == '"') out += "\"\"";
            else out += c;
        }
        out += "\",";
        out += fmt_double(r.value);
        out += ',';
        out += fmt_double(r.stderr_);
        out += ',';
        out += std::to_string(r.n_effective);
        out += ',';
        out += std::to_string(r.n_discarded);
        out += ',';
        out += std::to_string(r.seed);
        out += '\n';
    }
    return out;
}

void write_file_atomic(const std::string& path, const std::string& content) {
    namespace fs = std::filesystem;
    fs::path target(path);
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    fs::path tmp = target;
    tmp += ".tmp";
    {
        FILE* f = std::fopen(tmp.c_str(), "wb");
        if (!f) throw io_error("cannot open " + tmp.string());
        size_t written = std::fwrite(content.data(), 1, content.size(), f);
        int rc = std::fclose(f);
        if (written != content.size() || rc != 0) {
            std::remove(tmp.c_str());
            throw io_error("short write to " + tmp.string());
        }
    }
    std::error_code ec;
    fs::rename(tmp, target, ec);
    if (ec) {
        std::remove(tmp.c_str());
        throw io_error("cannot rename into " + path + ": " + ec.message());
    }
}

// ---------------------------------------------------------------------------
// Geometry JSON (schema voroperc.pointset.v1 / voroperc.tessellation.v1).
// ---------------------------------------------------------------------------

namespace {

json window_to_json(const Window& w) {
    return json{{"x0", w.x0}, {"x1", w.x1}, {"y0", w.y0}, {"y1", w.y1}};
}

Window window_from_json(const json& j) {
    return Window{j.at("x0").get<double>(), j.at("x1").get<double>(), j.at("y0").get<double>(),
                  j.at("y1").get<double>()};
}

}  // namespace

std::string pointset_to_json(const PointSet& ps) {
    json j;
    j["schema"] = "voroperc.pointset.v1";
    j["seed"] = ps.seed;
    j["window"] = window_to_json(ps.window);
    json pts = json::array();
    for (const Vec2& p : ps.points) pts.push_back(json::array({p.x, p.y}));
    j["points"] = std::move(pts);
    return j.dump();
}

PointSet pointset_from_json(const std::string& text) {
    json j = json::parse(text);
    if (j.at("schema").get<std::string>() != "voroperc.pointset.v1")
        throw io_error("pointset_from_json: unknown schema");
    PointSet ps;
    ps.seed = j.at("seed").get<uint64_t>();
    ps.window = window_from_json(j.at("window"));
    for (const auto& p : j.at("points"))
        ps.points.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
    return ps;
}

std::string tessellation_to_json(const Tessellation& t) {
    json j;
    j["schema"] = "voroperc.tessellation.v1";
    j["seed"] = t.pts.seed;
    j["window"] = window_to_json(t.pts.window);
    json pts = json::array();
    for (const Vec2& p : t.pts.points) pts.push_back(json::array({p.x, p.y}));
    j["points"] = std::move(pts);
    json edges = json::array();
    for (size_t i = 0; i < t.size(); ++i)
        for (int k : t.adj[i])
            if (k > static_cast<int>(i)) edges.push_back(json::array({i, k}));
    j["edges"] = std::move(edges);
    return j.dump();
}

}  // namespace voroperc
