#include "triwave/io.hpp"

#include <bit>
#include <cmath>
#include <cinttypes>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace triwave {

namespace {

static_assert(std::endian::native == std::endian::little,
              "payloads are little-endian; add byte swaps for this platform");

std::string fmt_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open for writing: " + path);
    return os;
}

std::ifstream open_in(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open for reading: " + path);
    return is;
}

void read_payload(std::ifstream& is, void* dst, size_t bytes, const std::string& path) {
    is.read(static_cast<char*>(dst), static_cast<std::streamsize>(bytes));
    if (static_cast<size_t>(is.gcount()) != bytes)
        throw std::runtime_error("truncated payload in " + path + ": expected " +
                                 std::to_string(bytes) + " bytes, got " +
                                 std::to_string(is.gcount()));
}

const char* tag_name(RegionTag t) { return t == RegionTag::physical ? "physical" : "pml"; }
const char* tag_name(BoundaryTag t) {
    return t == BoundaryTag::free_surface ? "free_surface" : "absorbing";
}

RegionTag parse_region(const std::string& s, const std::string& path) {
    if (s == "physical") return RegionTag::physical;
    if (s == "pml") return RegionTag::pml;
    throw std::runtime_error(path + ": unknown region tag '" + s + "'");
}

BoundaryTag parse_boundary(const std::string& s, const std::string& path) {
    if (s == "free_surface") return BoundaryTag::free_surface;
    if (s == "absorbing") return BoundaryTag::absorbing;
    throw std::runtime_error(path + ": unknown boundary tag '" + s + "'");
}

}  // namespace

void write_velocity(const std::string& path, const VelocityModel& vm) {
    auto os = open_out(path);
    os << "WLVM1 " << vm.nx << " " << vm.nz << " " << fmt_double(vm.x0) << " "
       << fmt_double(vm.z0) << " " << fmt_double(vm.dx) << " " << fmt_double(vm.dz) << "\n";
    os.write(reinterpret_cast<const char*>(vm.values.data()),
             static_cast<std::streamsize>(vm.values.size() * sizeof(double)));
}

VelocityModel read_velocity(const std::string& path) {
    auto is = open_in(path);
    std::string line;
    std::getline(is, line);
    std::istringstream hdr(line);
    std::string magic;
    VelocityModel vm;
    hdr >> magic >> vm.nx >> vm.nz >> vm.x0 >> vm.z0 >> vm.dx >> vm.dz;
    if (magic != "WLVM1" || !hdr || vm.nx <= 0 || vm.nz <= 0 || vm.dx <= 0 || vm.dz <= 0)
        throw std::runtime_error(path + ": bad WLVM1 header");
    vm.values.resize(static_cast<size_t>(vm.nx) * vm.nz);
    read_payload(is, vm.values.data(), vm.values.size() * sizeof(double), path);
    for (double v : vm.values)
        if (!(v > 0.0) || !std::isfinite(v))
            throw std::runtime_error(path + ": non-positive or non-finite wavespeed");
    return vm;
}

void write_mesh(const std::string& path, const Mesh& m) {
    auto os = open_out(path);
    os << "WLMESH1 " << m.n_vertices() << " " << m.n_triangles() << "\n";
    for (int v = 0; v < m.n_vertices(); ++v)
        os << fmt_double(m.vertices[v][0]) << " " << fmt_double(m.vertices[v][1]) << " "
           << tag_name(m.region_tags[v]) << "\n";
    for (const auto& t : m.triangles) os << t[0] << " " << t[1] << " " << t[2] << "\n";
    for (const auto& be : m.boundary_edges)
        os << be.a << " " << be.b << " " << tag_name(be.tag) << "\n";
}

Mesh read_mesh(const std::string& path) {
    auto is = open_in(path);
    std::string magic;
    int nv = 0, nt = 0;
    is >> magic >> nv >> nt;
    if (magic != "WLMESH1" || nv < 3 || nt < 1)
        throw std::runtime_error(path + ": bad WLMESH1 header");
    Mesh m;
    m.vertices.resize(nv);
    m.region_tags.resize(nv);
    for (int v = 0; v < nv; ++v) {
        std::string tag;
        if (!(is >> m.vertices[v][0] >> m.vertices[v][1] >> tag))
            throw std::runtime_error(path + ": truncated vertex table");
        m.region_tags[v] = parse_region(tag, path);
    }
    m.triangles.resize(nt);
    for (int t = 0; t < nt; ++t)
        if (!(is >> m.triangles[t][0] >> m.triangles[t][1] >> m.triangles[t][2]))
            throw std::runtime_error(path + ": truncated triangle table");
    int a = 0, b = 0;
    std::string tag;
    while (is >> a >> b >> tag) m.boundary_edges.push_back({a, b, parse_boundary(tag, path)});

    // Rectangles are implied by the coordinates and tags.
    auto bbox = [&](bool physical_only) {
        Rect r{1e300, -1e300, 1e300, -1e300};
        for (int v = 0; v < nv; ++v) {
            if (physical_only && m.region_tags[v] != RegionTag::physical) continue;
            r.x0 = std::min(r.x0, m.vertices[v][0]);
            r.x1 = std::max(r.x1, m.vertices[v][0]);
            r.z0 = std::min(r.z0, m.vertices[v][1]);
            r.z1 = std::max(r.z1, m.vertices[v][1]);
        }
        return r;
    };
    m.full = bbox(false);
    m.physical = bbox(true);
    m.validate();
    return m;
}

void write_shotrecord(const std::string& path, const ShotRecord& r) {
    auto os = open_out(path);
    os << "WLSHOT1 " << r.nt << " " << fmt_double(r.dt) << " " << r.receivers.size() << "\n";
    for (const auto& rc : r.receivers)
        os << fmt_double(rc[0]) << " " << fmt_double(rc[1]) << "\n";
    std::vector<float> buf(r.data.size());
    for (size_t i = 0; i < r.data.size(); ++i) buf[i] = static_cast<float>(r.data[i]);
    os.write(reinterpret_cast<const char*>(buf.data()),
             static_cast<std::streamsize>(buf.size() * sizeof(float)));
}

ShotRecord read_shotrecord(const std::string& path) {
    auto is = open_in(path);
    std::string line;
    std::getline(is, line);
    std::istringstream hdr(line);
    std::string magic;
    ShotRecord r;
    size_t nrec = 0;
    hdr >> magic >> r.nt >> r.dt >> nrec;
    if (magic != "WLSHOT1" || !hdr || r.nt <= 0 || !(r.dt > 0))
        throw std::runtime_error(path + ": bad WLSHOT1 header");
    r.receivers.resize(nrec);
    for (size_t k = 0; k < nrec; ++k) {
        std::getline(is, line);
        std::istringstream ls(line);
        if (!(ls >> r.receivers[k][0] >> r.receivers[k][1]))
            throw std::runtime_error(path + ": truncated receiver table");
    }
    std::vector<float> buf(nrec * r.nt);
    read_payload(is, buf.data(), buf.size() * sizeof(float), path);
    r.data.assign(buf.begin(), buf.end());
    for (double v : r.data)
        if (!std::isfinite(v)) throw std::runtime_error(path + ": non-finite sample");
    return r;
}

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
    auto it = kv_.find(key);
    return it == kv_.end() ? fallback : it->second;
}

double Config::get_double(const std::string& key, double fallback) const {
    auto it = kv_.find(key);
    if (it == kv_.end()) return fallback;
    size_t pos = 0;
    const double v = std::stod(it->second, &pos);
    if (pos != it->second.size())
        throw std::runtime_error("config key " + key + ": not a number: '" + it->second + "'");
    return v;
}

int Config::get_int(const std::string& key, int fallback) const {
    auto it = kv_.find(key);
    if (it == kv_.end()) return fallback;
    size_t pos = 0;
    const int v = std::stoi(it->second, &pos);
    if (pos != it->second.size())
        throw std::runtime_error("config key " + key + ": not an integer: '" + it->second + "'");
    return v;
}

bool Config::get_bool(const std::string& key, bool fallback) const {
    auto it = kv_.find(key);
    if (it == kv_.end()) return fallback;
    if (it->second == "true" || it->second == "1") return true;
    if (it->second == "false" || it->second == "0") return false;
    throw std::runtime_error("config key " + key + ": not a boolean: '" + it->second + "'");
}

double Config::require_double(const std::string& key) const {
    if (!has(key)) throw std::runtime_error("config key " + key + " is required");
    return get_double(key, 0.0);
}

Config parse_config(const std::string& path, const std::set<std::string>& allowed_keys) {
    auto is = open_in(path);
    Config cfg;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        // trim
        auto notspace = [](unsigned char ch) { return !std::isspace(ch); };
        line.erase(line.begin(), std::find_if(line.begin(), line.end(), notspace));
        line.erase(std::find_if(line.rbegin(), line.rend(), notspace).base(), line.end());
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                     ": expected `section.key = value`");
        std::string key = line.substr(0, eq);
        std::string val = line.substr(eq + 1);
        key.erase(std::find_if(key.rbegin(), key.rend(), notspace).base(), key.end());
        val.erase(val.begin(), std::find_if(val.begin(), val.end(), notspace));
        if (key.find('.') == std::string::npos)
            throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                     ": key must be section.key, got '" + key + "'");
        if (!allowed_keys.count(key))
            throw std::runtime_error(path + ":" + std::to_string(lineno) + ": unknown key '" +
                                     key + "'");
        cfg.set(key, val);
    }
    return cfg;
}

std::uint64_t fnv1a64_file(const std::string& path) {
    auto is = open_in(path);
    std::uint64_t h = 1469598103934665603ull;
    char buf[65536];
    while (is) {
        is.read(buf, sizeof(buf));
        const std::streamsize got = is.gcount();
        for (std::streamsize i = 0; i < got; ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 1099511628211ull;
        }
    }
    return h;
}

void write_manifest(const std::string& path, const std::vector<std::string>& files) {
    auto os = open_out(path);
    for (const auto& f : files) {
        std::ifstream probe(f, std::ios::binary | std::ios::ate);
        if (!probe) throw std::runtime_error("manifest: missing artifact " + f);
        const auto size = static_cast<long long>(probe.tellg());
        char hex[32];
        std::snprintf(hex, sizeof(hex), "%016" PRIx64, fnv1a64_file(f));
        // Manifest records the basename so run directories relocate cleanly.
        const auto slash = f.find_last_of('/');
        os << (slash == std::string::npos ? f : f.substr(slash + 1)) << " " << hex << " " << size
           << "\n";
    }
}

}  // namespace triwave
