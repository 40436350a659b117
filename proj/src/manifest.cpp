#include "activeseg/manifest.hpp"

#include <fstream>
#include <sstream>

#include "activeseg/error.hpp"

namespace activeseg {

using json = nlohmann::json;

const char* split_name(Split s) noexcept {
    switch (s) {
    case Split::pool: return "pool";
    case Split::val: return "val";
    case Split::test: return "test";
    }
    return "unknown";
}

Split parse_split(const std::string& name) {
    for (Split s : {Split::pool, Split::val, Split::test})
        if (name == split_name(s)) return s;
    throw InvalidArgument("unknown split '" + name + "'");
}

std::vector<ManifestEntry> Manifest::in_split(Split s) const {
    std::vector<ManifestEntry> out;
    for (const auto& e : volumes)
        if (e.split == s) out.push_back(e);
    return out;
}

json manifest_to_json(const Manifest& m) {
    json vols = json::array();
    for (const auto& e : m.volumes)
        vols.push_back({{"id", e.id},
                        {"name", e.name},
                        {"split", split_name(e.split)},
                        {"image", e.image},
                        {"label", e.label},
                        {"seed", e.seed}});
    return {{"format", "activeseg-manifest"}, {"version", 1}, {"seed", m.seed}, {"volumes", vols}};
}

namespace {

template <typename T>
T field(const json& j, const char* key, const std::string& where) {
    if (!j.is_object() || !j.contains(key)) throw ParseError(where + key, "missing");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ParseError(where + key, e.what());
    }
}

} // namespace

Manifest manifest_from_json(const json& j) {
    if (field<std::string>(j, "format", "") != "activeseg-manifest") throw ParseError("format", "not a manifest");
    if (field<int>(j, "version", "") != 1) throw ParseError("version", "unsupported version");
    Manifest m;
    m.seed = field<std::uint64_t>(j, "seed", "");
    const json vols = field<json>(j, "volumes", "");
    if (!vols.is_array()) throw ParseError("volumes", "expected an array");
    for (std::size_t i = 0; i < vols.size(); ++i) {
        const std::string where = "volumes[" + std::to_string(i) + "].";
        ManifestEntry e;
        e.id = field<std::size_t>(vols[i], "id", where);
        e.name = field<std::string>(vols[i], "name", where);
        try {
            e.split = parse_split(field<std::string>(vols[i], "split", where));
        } catch (const InvalidArgument& err) {
            throw ParseError(where + "split", err.what());
        }
        e.image = field<std::string>(vols[i], "image", where);
        e.label = field<std::string>(vols[i], "label", where);
        e.seed = field<std::uint64_t>(vols[i], "seed", where);
        m.volumes.push_back(std::move(e));
    }
    for (Split s : {Split::pool, Split::val, Split::test}) {
        const auto entries = m.in_split(s);
        for (std::size_t i = 0; i < entries.size(); ++i)
            if (entries[i].id != i)
                throw ParseError("volumes", std::string("ids of split ") + split_name(s) + " must be 0, 1, ... in order");
    }
    return m;
}

void save_manifest(const std::filesystem::path& path, const Manifest& m) {
    write_file_atomic(path, manifest_to_json(m).dump(2) + "\n");
}

Manifest load_manifest(const std::filesystem::path& path) {
    json j;
    try {
        j = json::parse(read_file(path));
    } catch (const json::parse_error& e) {
        throw ParseError("manifest", e.what());
    }
    return manifest_from_json(j);
}

json pool_state_to_json(const PoolState& pool, const std::string& strategy, std::size_t iteration) {
    json vols = json::array();
    for (VolumeId id = 0; id < pool.size(); ++id) {
        if (pool.status(id) == AnnotationStatus::unannotated) continue;
        const auto& s = pool.annotated_slices(id);
        vols.push_back({{"id", id},
                        {"status", status_name(pool.status(id))},
                        {"slices", std::vector<std::size_t>(s.begin(), s.end())}});
    }
    const Ledger& l = pool.ledger();
    return {{"format", "activeseg-pool-state"},
            {"version", 1},
            {"strategy", strategy},
            {"iteration", iteration},
            {"ledger", {{"slices", l.slices}, {"liver_slices", l.liver_slices}, {"volumes", l.volumes}}},
            {"volumes", vols}};
}

RestoredPoolState restore_pool_state(const json& j, PoolState& pool) {
    if (field<std::string>(j, "format", "") != "activeseg-pool-state") throw ParseError("format", "not a pool state");
    if (field<int>(j, "version", "") != 1) throw ParseError("version", "unsupported version");
    if (pool.ledger().volumes != 0) throw InvalidArgument("restore_pool_state: pool is not fresh");
    RestoredPoolState out;
    out.strategy = field<std::string>(j, "strategy", "");
    out.iteration = field<std::size_t>(j, "iteration", "");
    const json ledger = field<json>(j, "ledger", "");
    const Ledger stored{field<std::size_t>(ledger, "slices", "ledger."),
                        field<std::size_t>(ledger, "liver_slices", "ledger."),
                        field<std::size_t>(ledger, "volumes", "ledger.")};
    const json vols = field<json>(j, "volumes", "");
    if (!vols.is_array()) throw ParseError("volumes", "expected an array");
    VolumeSelection full;
    SliceSelection partial;
    for (std::size_t i = 0; i < vols.size(); ++i) {
        const std::string where = "volumes[" + std::to_string(i) + "].";
        const auto id = field<std::size_t>(vols[i], "id", where);
        const auto status = field<std::string>(vols[i], "status", where);
        const auto slices = field<std::vector<std::size_t>>(vols[i], "slices", where);
        if (id >= pool.size()) throw ParseError(where + "id", "outside the pool");
        if (status == "full") {
            if (slices.size() != pool.dims(id).nz) throw ParseError(where + "slices", "full volume lists wrong slices");
            full.ids.push_back(id);
        } else if (status == "slices") {
            for (std::size_t z : slices) partial.slices.push_back({id, z});
        } else {
            throw ParseError(where + "status", "unexpected status '" + status + "'");
        }
    }
    try {
        pool.annotate(full);
        pool.annotate(partial);
    } catch (const InvalidArgument& e) {
        throw ParseError("volumes", e.what());
    }
    if (!(pool.ledger() == stored)) throw ParseError("ledger", "does not match the replayed annotations");
    return out;
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
        out << content;
        out.flush();
        if (!out) throw std::runtime_error("write failed: " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("file", "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace activeseg
