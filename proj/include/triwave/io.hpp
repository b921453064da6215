#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "triwave/mesh.hpp"
#include "triwave/propagator.hpp"
#include "triwave/velocity_model.hpp"

namespace triwave {

// Velocity raster: ASCII header `WLVM1 nx nz x0 z0 dx dz`, newline, then
// nx*nz little-endian binary64 values, row-major with x fastest.
void write_velocity(const std::string& path, const VelocityModel& vm);
VelocityModel read_velocity(const std::string& path);

// Mesh: ASCII `WLMESH1 nv nt`, nv lines `x z region_tag`, nt lines `i j k`
// (0-based), then one `i j tag` line per boundary edge. The physical/full
// rectangles are reconstructed from the vertex tags on read.
void write_mesh(const std::string& path, const Mesh& m);
Mesh read_mesh(const std::string& path);

// Shot record: ASCII header `WLSHOT1 nt dt nrec` + nrec `x z` lines, then
// little-endian binary32 samples, receiver-major.
void write_shotrecord(const std::string& path, const ShotRecord& r);
ShotRecord read_shotrecord(const std::string& path);

/// Line-oriented `section.key = value` configuration. `#` starts a comment.
/// Keys are validated against a whitelist: anything unknown is an error.
class Config {
public:
    void set(const std::string& key, const std::string& value) { kv_[key] = value; }
    bool has(const std::string& key) const { return kv_.count(key) != 0; }

    std::string get_string(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key, double fallback) const;
    int get_int(const std::string& key, int fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    double require_double(const std::string& key) const;

    const std::map<std::string, std::string>& entries() const { return kv_; }

private:
    std::map<std::string, std::string> kv_;
};

Config parse_config(const std::string& path, const std::set<std::string>& allowed_keys);

/// FNV-1a 64-bit hash of a file's bytes (used by run manifests).
std::uint64_t fnv1a64_file(const std::string& path);

/// Writes `<name> <hex hash> <size>` lines for each artifact.
void write_manifest(const std::string& path, const std::vector<std::string>& files);

}  // namespace triwave
