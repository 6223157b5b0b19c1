#include "kslab/persist.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace fs = std::filesystem;

namespace kslab {

using json = nlohmann::ordered_json;

namespace {

constexpr std::uint64_t kFnvOffset = 1469598103934665603ULL;
constexpr std::uint64_t kFnvPrime = 1099511628211ULL;

std::uint64_t fnv_step(std::uint64_t h, const void *data, std::size_t len) {
    const auto *p = static_cast<const unsigned char *>(data);
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= kFnvPrime;
    }
    return h;
}

// streams bytes to disk while folding them into a checksum, so listed files
// are hashed exactly as written
class ChecksumWriter {
  public:
    explicit ChecksumWriter(const fs::path &path) : out_(path, std::ios::binary) {
        if (!out_) throw std::runtime_error("cannot write " + path.string());
    }
    void write(const std::string &s) {
        out_.write(s.data(), static_cast<std::streamsize>(s.size()));
        hash_ = fnv_step(hash_, s.data(), s.size());
    }
    std::uint64_t finish() {
        out_.close();
        if (!out_) throw std::runtime_error("write failed");
        return hash_;
    }

  private:
    std::ofstream out_;
    std::uint64_t hash_ = kFnvOffset;
};

std::string read_text_file(const fs::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

double parse_double(const std::string &s, const char *what) {
    try {
        return std::stod(s);
    } catch (const std::exception &) {
        throw std::runtime_error(std::string("run dir: bad ") + what + " value '" + s + "'");
    }
}

std::string replica_rel(int index) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "replicas/r%04d", index);
    return buf;
}

EventKind kind_from(const std::string &s) {
    if (s == "cluster_collapse") return EventKind::ClusterCollapse;
    if (s == "taming_activated") return EventKind::TamingActivated;
    if (s == "substep_floor_hit") return EventKind::SubstepFloorHit;
    throw std::runtime_error("run dir: unknown event kind '" + s + "'");
}

std::string csv_row(double t, int i, double x, double y) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "%.17g,%d,%.17g,%.17g\n", t, i, x, y);
    return buf;
}

json event_to_json(const Event &e) {
    json o;
    o["t"] = format_g17(e.t);
    o["kind"] = to_string(e.kind);
    o["k"] = e.k;
    o["ell"] = format_g17(e.ell);
    o["cluster"] = e.cluster;
    o["value"] = format_g17(e.value);
    return o;
}

Event event_from_json(const json &o) {
    Event e;
    e.t = parse_double(o.at("t").get<std::string>(), "event time");
    e.kind = kind_from(o.at("kind").get<std::string>());
    e.k = o.at("k").get<int>();
    e.ell = parse_double(o.at("ell").get<std::string>(), "event ell");
    e.cluster = o.at("cluster").get<std::vector<int>>();
    e.value = parse_double(o.at("value").get<std::string>(), "event value");
    return e;
}

std::vector<Snapshot> parse_snapshots_csv(const std::string &text, const std::string &where) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != "t,i,x,y")
        throw std::runtime_error(where + ": bad snapshot header");
    std::vector<Snapshot> out;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string f[4];
        for (int k = 0; k < 4; ++k)
            if (!std::getline(ls, f[k], k < 3 ? ',' : '\n'))
                throw std::runtime_error(where + ": short snapshot row");
        const double t = parse_double(f[0], "snapshot time");
        const int i = static_cast<int>(parse_double(f[1], "particle index"));
        const Vec2 p{parse_double(f[2], "x"), parse_double(f[3], "y")};
        if (i == 0) out.push_back({t, {}});
        if (out.empty() || i != static_cast<int>(out.back().positions.size()))
            throw std::runtime_error(where + ": particle indices out of order");
        out.back().positions.push_back(p);
    }
    return out;
}

} // namespace

std::uint64_t fnv1a64(const void *data, std::size_t len) {
    return fnv_step(kFnvOffset, data, len);
}

std::uint64_t fnv1a64_file(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::uint64_t h = kFnvOffset;
    char buf[1 << 16];
    while (in.read(buf, sizeof buf) || in.gcount() > 0)
        h = fnv_step(h, buf, static_cast<std::size_t>(in.gcount()));
    return h;
}

std::string hex64(std::uint64_t v) {
    char buf[24];
    std::snprintf(buf, sizeof buf, "0x%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::string format_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_run_dir(const std::string &dir, const RunSpec &spec, std::uint64_t family_hash,
                   const std::vector<TrajectoryRecord> &records,
                   const DiagnosticsReport &report) {
    const fs::path root(dir);
    fs::create_directories(root);
    // drop artifacts of any previous run so the directory matches exactly
    fs::remove_all(root / "replicas");
    fs::remove_all(root / "series");
    fs::remove(root / "metadata.json");
    fs::remove(root / "diagnostics.json");

    json checksums = json::object();

    for (std::size_t r = 0; r < records.size(); ++r) {
        const auto &rec = records[r];
        const std::string rel = replica_rel(static_cast<int>(r));
        fs::create_directories(root / rel);

        ChecksumWriter snap(root / rel / "snapshots.csv");
        snap.write("t,i,x,y\n");
        for (const auto &s : rec.snapshots)
            for (std::size_t i = 0; i < s.positions.size(); ++i)
                snap.write(csv_row(s.t, static_cast<int>(i), s.positions[i].x, s.positions[i].y));
        checksums[rel + "/snapshots.csv"] = hex64(snap.finish());

        ChecksumWriter ev(root / rel / "events.jsonl");
        for (const auto &e : rec.events)
            ev.write(event_to_json(e).dump() + "\n");
        checksums[rel + "/events.jsonl"] = hex64(ev.finish());
    }

    json diag;
    diag["estimates"] = json::array();
    for (const auto &e : report.estimates) {
        json o;
        o["name"] = e.name;
        o["value"] = format_g17(e.value);
        o["std_error"] = format_g17(e.std_error);
        o["n"] = e.n;
        o["window"] = e.window;
        diag["estimates"].push_back(o);
    }
    diag["series"] = json::array();
    if (!report.series.empty()) fs::create_directories(root / "series");
    for (const auto &s : report.series) {
        const std::string rel = "series/" + s.name + ".csv";
        ChecksumWriter cw(root / rel);
        cw.write("t,value\n");
        for (std::size_t i = 0; i < s.series.t.size(); ++i)
            cw.write(format_g17(s.series.t[i]) + "," + format_g17(s.series.v[i]) + "\n");
        checksums[rel] = hex64(cw.finish());
        diag["series"].push_back(s.name);
    }
    {
        ChecksumWriter cw(root / "diagnostics.json");
        cw.write(diag.dump(2) + "\n");
        checksums["diagnostics.json"] = hex64(cw.finish());
    }

    json meta;
    meta["format"] = kRunFormat;
    meta["version"] = kVersion;
    meta["config"] = json::object();
    for (const auto &[k, v] : echo_keymap(spec)) meta["config"][k] = v;
    meta["family_hash"] = hex64(family_hash);
    meta["replicas"] = json::array();
    for (std::size_t r = 0; r < records.size(); ++r) {
        const auto &rec = records[r];
        json o;
        o["index"] = static_cast<int>(r);
        o["seed"] = std::to_string(rec.seed);
        o["sixth_moment"] = format_g17(rec.stats.initial_sixth_moment);
        o["steps"] = rec.stats.steps;
        o["taming_steps"] = rec.stats.taming_steps;
        o["floor_hits"] = rec.stats.floor_hits;
        o["min_dt"] = format_g17(rec.stats.min_dt);
        o["collapsed"] = rec.collapsed;
        o["collapse_time"] = format_g17(rec.collapse_time);
        o["collapse_cluster"] = rec.collapse_cluster;
        meta["replicas"].push_back(o);
    }
    meta["checksums"] = checksums;

    std::ofstream out(root / "metadata.json", std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + (root / "metadata.json").string());
    out << meta.dump(2) << "\n";
    if (!out) throw std::runtime_error("write failed for metadata.json");
}

LoadedRun read_run_dir(const std::string &dir) {
    const fs::path root(dir);
    json meta;
    try {
        meta = json::parse(read_text_file(root / "metadata.json"));
    } catch (const json::exception &e) {
        throw std::runtime_error("run dir " + dir + ": bad metadata.json: " + e.what());
    }
    if (meta.value("format", "") != std::string(kRunFormat))
        throw std::runtime_error("run dir " + dir + ": unrecognized format");

    LoadedRun run;
    run.dir = dir;
    for (const auto &[k, v] : meta.at("config").items()) run.echo[k] = v.get<std::string>();
    try {
        run.spec = run_spec_from(run.echo);
    } catch (const std::invalid_argument &e) {
        throw std::runtime_error("run dir " + dir + ": echoed config rejected: " + e.what());
    }
    run.family_hash = std::stoull(meta.at("family_hash").get<std::string>(), nullptr, 16);

    const auto &reps = meta.at("replicas");
    for (const auto &o : reps) {
        TrajectoryRecord rec;
        rec.theta = run.spec.cfg.theta;
        rec.n = run.spec.cfg.n;
        rec.horizon = run.spec.cfg.horizon;
        rec.snapshot_interval = run.spec.cfg.snapshot_interval;
        rec.seed = std::stoull(o.at("seed").get<std::string>());
        rec.stats.initial_sixth_moment =
            parse_double(o.at("sixth_moment").get<std::string>(), "sixth moment");
        rec.stats.steps = o.at("steps").get<long long>();
        rec.stats.taming_steps = o.at("taming_steps").get<long long>();
        rec.stats.floor_hits = o.at("floor_hits").get<long long>();
        rec.stats.min_dt = parse_double(o.at("min_dt").get<std::string>(), "min dt");
        rec.collapsed = o.at("collapsed").get<bool>();
        rec.collapse_time = parse_double(o.at("collapse_time").get<std::string>(), "collapse time");
        rec.collapse_cluster = o.at("collapse_cluster").get<std::vector<int>>();

        const std::string rel = replica_rel(o.at("index").get<int>());
        rec.snapshots = parse_snapshots_csv(read_text_file(root / rel / "snapshots.csv"),
                                            dir + "/" + rel);
        std::istringstream ev(read_text_file(root / rel / "events.jsonl"));
        std::string line;
        while (std::getline(ev, line)) {
            if (line.empty()) continue;
            try {
                rec.events.push_back(event_from_json(json::parse(line)));
            } catch (const json::exception &e) {
                throw std::runtime_error(dir + "/" + rel + "/events.jsonl: " + e.what());
            }
        }
        run.records.push_back(std::move(rec));
    }
    return run;
}

std::vector<std::string> checksum_mismatches(const std::string &dir) {
    const fs::path root(dir);
    json meta;
    try {
        meta = json::parse(read_text_file(root / "metadata.json"));
    } catch (const json::exception &e) {
        throw std::runtime_error("run dir " + dir + ": bad metadata.json: " + e.what());
    }
    std::vector<std::string> bad;
    for (const auto &[rel, hash] : meta.at("checksums").items()) {
        std::string actual;
        try {
            actual = hex64(fnv1a64_file((root / rel).string()));
        } catch (const std::runtime_error &) {
            bad.push_back(rel); // missing or unreadable counts as a mismatch
            continue;
        }
        if (actual != hash.get<std::string>()) bad.push_back(rel);
    }
    return bad;
}

} // namespace kslab
