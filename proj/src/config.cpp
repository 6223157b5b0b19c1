#include "kslab/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "kslab/empirical_measure.hpp"

namespace kslab {

namespace {

std::string trim(const std::string &s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

[[noreturn]] void bad(const std::string &msg) { throw std::invalid_argument("config: " + msg); }

bool valid_key(const std::string &k) {
    if (k.empty() || k.front() == '.' || k.back() == '.') return false;
    for (char c : k)
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.')) return false;
    return true;
}

// comma- or whitespace-separated tokens
std::vector<std::string> split_list(const std::string &s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == ',' || std::isspace(static_cast<unsigned char>(c))) {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

double to_double(const std::string &key, const std::string &v) {
    double d = 0.0;
    std::size_t pos = 0;
    try {
        d = std::stod(v, &pos);
    } catch (const std::exception &) {
        bad("key '" + key + "': not a number: '" + v + "'");
    }
    if (pos != v.size()) bad("key '" + key + "': trailing characters in '" + v + "'");
    return d;
}

long long to_int(const std::string &key, const std::string &v) {
    const double d = to_double(key, v);
    if (d != std::floor(d) || std::fabs(d) > 9.0e18)
        bad("key '" + key + "': expected an integer, got '" + v + "'");
    return static_cast<long long>(d);
}

std::uint64_t to_u64(const std::string &key, const std::string &v) {
    unsigned long long u = 0;
    std::size_t pos = 0;
    try {
        u = std::stoull(v, &pos);
    } catch (const std::exception &) {
        bad("key '" + key + "': expected an unsigned integer, got '" + v + "'");
    }
    if (pos != v.size() || v.find('-') != std::string::npos)
        bad("key '" + key + "': expected an unsigned integer, got '" + v + "'");
    return static_cast<std::uint64_t>(u);
}

// tracks which keys a builder consumed so leftovers can be rejected
struct Reader {
    const KeyMap &map;
    std::set<std::string> used;

    const std::string *find(const std::string &key) {
        auto it = map.find(key);
        if (it == map.end()) return nullptr;
        used.insert(key);
        return &it->second;
    }
    double number(const std::string &key, double dflt) {
        const auto *v = find(key);
        return v ? to_double(key, *v) : dflt;
    }
    long long integer(const std::string &key, long long dflt) {
        const auto *v = find(key);
        return v ? to_int(key, *v) : dflt;
    }
    std::uint64_t u64(const std::string &key, std::uint64_t dflt) {
        const auto *v = find(key);
        return v ? to_u64(key, *v) : dflt;
    }
    std::string text(const std::string &key, const std::string &dflt) {
        const auto *v = find(key);
        return v ? *v : dflt;
    }
    void reject_unused() const {
        for (const auto &[k, v] : map)
            if (!used.count(k)) bad("unknown key '" + k + "'");
    }
};

double detector_ell(const std::string &token, int n) {
    if (token == "n") return static_cast<double>(n);
    if (token == "n^4") {
        const double nn = static_cast<double>(n);
        return nn * nn * nn * nn;
    }
    return to_double("detectors.list", token);
}

std::vector<CollapseDetector> parse_detectors(const std::string &text, int n) {
    std::vector<CollapseDetector> out;
    for (const auto &tok : split_list(text)) {
        const auto colon = tok.find(':');
        if (colon == std::string::npos)
            bad("detectors.list: expected k:ell, got '" + tok + "'");
        CollapseDetector d;
        d.k = static_cast<int>(to_int("detectors.list", tok.substr(0, colon)));
        d.ell = detector_ell(tok.substr(colon + 1), n);
        out.push_back(d);
    }
    return out;
}

std::vector<Atom> parse_atoms(const std::string &text) {
    std::vector<Atom> out;
    for (const auto &tok : split_list(text)) {
        std::vector<std::string> parts;
        std::string cur;
        for (char c : tok) {
            if (c == ':') {
                parts.push_back(cur);
                cur.clear();
            } else {
                cur.push_back(c);
            }
        }
        parts.push_back(cur);
        if (parts.size() != 3) bad("law.atoms: expected w:x:y, got '" + tok + "'");
        Atom a;
        a.w = to_double("law.atoms", parts[0]);
        a.x = to_double("law.atoms", parts[1]);
        a.y = to_double("law.atoms", parts[2]);
        out.push_back(a);
    }
    return out;
}

InitialLaw parse_law(Reader &r, const std::string &prefix) {
    InitialLaw law;
    const std::string kind = r.text(prefix + "kind", "gaussian");
    if (kind == "gaussian")
        law.kind = LawKind::GaussianIID;
    else if (kind == "disk")
        law.kind = LawKind::UniformDiskIID;
    else if (kind == "atoms")
        law.kind = LawKind::AtomPlusJitter;
    else if (kind == "file")
        law.kind = LawKind::FileAtoms;
    else
        bad("law.kind: expected gaussian|disk|atoms|file, got '" + kind + "'");

    const std::string center = r.text(prefix + "center", "0 0");
    const auto cparts = split_list(center);
    if (cparts.size() != 2) bad("law.center: expected two numbers, got '" + center + "'");
    law.center = {to_double("law.center", cparts[0]), to_double("law.center", cparts[1])};
    law.sigma = r.number(prefix + "sigma", 1.0);
    law.radius = r.number(prefix + "radius", 1.0);
    law.jitter = r.number(prefix + "jitter", 0.05);
    law.atom_file = r.text(prefix + "file", "");
    const std::string atoms = r.text(prefix + "atoms", "");
    if (!atoms.empty()) law.atoms = parse_atoms(atoms);

    if (law.kind == LawKind::FileAtoms && law.atoms.empty()) {
        if (law.atom_file.empty()) bad("law.kind = file requires law.file");
        law.atoms = load_atom_file(law.atom_file).atoms;
    }
    return law;
}

std::string g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

const std::vector<std::string> kDiagnosticNames = {"dispersion", "collapse", "drift", "qv",
                                                   "variance",   "moment",   "triples", "residual",
                                                   "holder",     "diffuse"};

} // namespace

KeyMap parse_config_text(const std::string &text) {
    KeyMap map;
    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t.front() == '#' || t.front() == ';') continue;
        if (t.front() == '[') {
            if (t.back() != ']') bad("line " + std::to_string(lineno) + ": unterminated section");
            section = trim(t.substr(1, t.size() - 2));
            if (!valid_key(section))
                bad("line " + std::to_string(lineno) + ": bad section name '" + section + "'");
            continue;
        }
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            bad("line " + std::to_string(lineno) + ": expected key = value");
        std::string key = trim(t.substr(0, eq));
        const std::string value = trim(t.substr(eq + 1));
        if (!section.empty()) key = section + "." + key;
        if (!valid_key(key)) bad("line " + std::to_string(lineno) + ": bad key '" + key + "'");
        map[key] = value;
    }
    return map;
}

KeyMap parse_config_file(const std::string &path) {
    std::ifstream in(path);
    if (!in) bad("cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str());
}

void apply_override(KeyMap &map, const std::string &assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos) bad("override '" + assignment + "': expected key=value");
    const std::string key = trim(assignment.substr(0, eq));
    if (!valid_key(key)) bad("override: bad key '" + key + "'");
    map[key] = trim(assignment.substr(eq + 1));
}

bool has_sweep_grid(const KeyMap &map) {
    return map.count("sweep.theta") || map.count("sweep.n");
}

RunSpec run_spec_from(const KeyMap &map) {
    if (has_sweep_grid(map)) bad("sweep grid present; this entry point expects a single cell");
    Reader r{map, {}};
    RunSpec spec;
    SimConfig &cfg = spec.cfg;
    cfg.theta = r.number("theta", cfg.theta);
    cfg.n = static_cast<int>(r.integer("n", cfg.n));
    cfg.horizon = r.number("horizon", cfg.horizon);
    cfg.replicas = static_cast<int>(r.integer("replicas", cfg.replicas));
    cfg.master_seed = r.u64("master_seed", cfg.master_seed);
    cfg.output_dir = r.text("output_dir", cfg.output_dir);
    cfg.snapshot_interval = r.number("snapshot_interval", cfg.snapshot_interval);
    cfg.policy.dt_max = r.number("policy.dt_max", cfg.policy.dt_max);
    cfg.policy.proximity_exponent =
        r.number("policy.proximity_exponent", cfg.policy.proximity_exponent);
    cfg.policy.taming_cap = r.number("policy.taming_cap", cfg.policy.taming_cap);
    cfg.policy.substep_floor = r.number("policy.substep_floor", cfg.policy.substep_floor);
    cfg.detectors = parse_detectors(r.text("detectors.list", ""), cfg.n);
    cfg.law = parse_law(r, "law.");

    spec.parallelism = static_cast<int>(r.integer("parallelism", 0));
    if (spec.parallelism < 0) bad("parallelism must be >= 0");

    DiagnosticsSelect &d = spec.diag;
    for (const auto &name : split_list(r.text("diagnostics.select", "dispersion collapse drift qv"))) {
        if (std::find(kDiagnosticNames.begin(), kDiagnosticNames.end(), name) ==
            kDiagnosticNames.end())
            bad("diagnostics.select: unknown diagnostic '" + name + "'");
        if (std::find(d.select.begin(), d.select.end(), name) == d.select.end())
            d.select.push_back(name);
    }
    d.moment_gamma = r.number("diagnostics.moment_gamma", d.moment_gamma);
    d.triple_budget = r.integer("diagnostics.triple_budget", d.triple_budget);
    d.residual_term = static_cast<int>(r.integer("diagnostics.residual_term", d.residual_term));
    d.holder_exponent = r.number("diagnostics.holder_exponent", d.holder_exponent);
    d.diffuse_scale = r.number("diagnostics.diffuse_scale", d.diffuse_scale);
    auto selected = [&](const char *name) {
        return std::find(d.select.begin(), d.select.end(), name) != d.select.end();
    };
    if (selected("moment") && !(d.moment_gamma > cfg.theta && d.moment_gamma < 2.0))
        bad("diagnostics.moment_gamma must lie in (theta, 2) when moment is selected");
    if (d.residual_term < 0 || d.residual_term >= kFamilyTerms)
        bad("diagnostics.residual_term must lie in [0, " + std::to_string(kFamilyTerms) + ")");
    if (d.triple_budget < 1) bad("diagnostics.triple_budget must be >= 1");
    if (!(d.holder_exponent > 0.0) || d.holder_exponent > 1.0)
        bad("diagnostics.holder_exponent must lie in (0, 1]");
    if (!(d.diffuse_scale > 0.0)) bad("diagnostics.diffuse_scale must be > 0");

    r.reject_unused();
    validate(cfg);
    return spec;
}

SweepSpec sweep_spec_from(const KeyMap &map) {
    SweepSpec sweep;
    sweep.base = map;
    auto take = [&](const char *key) {
        std::string v;
        auto it = sweep.base.find(key);
        if (it != sweep.base.end()) {
            v = it->second;
            sweep.base.erase(it);
        }
        return v;
    };
    for (const auto &tok : split_list(take("sweep.theta")))
        sweep.thetas.push_back(to_double("sweep.theta", tok));
    for (const auto &tok : split_list(take("sweep.n")))
        sweep.ns.push_back(static_cast<int>(to_int("sweep.n", tok)));
    if (sweep.thetas.empty() || sweep.ns.empty())
        bad("sweep requires nonempty sweep.theta and sweep.n grids");
    // validate the template against the first grid point; later cells
    // re-validate themselves and may fail individually
    cell_spec(sweep, sweep.thetas.front(), sweep.ns.front());
    return sweep;
}

RunSpec cell_spec(const SweepSpec &sweep, double theta, int n) {
    KeyMap cell = sweep.base;
    cell["theta"] = g17(theta);
    cell["n"] = std::to_string(n);
    return run_spec_from(cell);
}

KeyMap echo_keymap(const RunSpec &spec) {
    const SimConfig &cfg = spec.cfg;
    KeyMap out;
    out["theta"] = g17(cfg.theta);
    out["n"] = std::to_string(cfg.n);
    out["horizon"] = g17(cfg.horizon);
    out["replicas"] = std::to_string(cfg.replicas);
    out["master_seed"] = std::to_string(cfg.master_seed);
    out["output_dir"] = cfg.output_dir;
    out["snapshot_interval"] = g17(cfg.snapshot_interval);
    out["parallelism"] = std::to_string(spec.parallelism);
    out["policy.dt_max"] = g17(cfg.policy.dt_max);
    out["policy.proximity_exponent"] = g17(cfg.policy.proximity_exponent);
    out["policy.taming_cap"] = g17(cfg.policy.taming_cap);
    out["policy.substep_floor"] = g17(cfg.policy.substep_floor);

    std::string dets;
    for (const auto &d : cfg.detectors) {
        if (!dets.empty()) dets += ", ";
        dets += std::to_string(d.k) + ":" + g17(d.ell);
    }
    out["detectors.list"] = dets;

    const InitialLaw &law = cfg.law;
    switch (law.kind) {
    case LawKind::GaussianIID: out["law.kind"] = "gaussian"; break;
    case LawKind::UniformDiskIID: out["law.kind"] = "disk"; break;
    case LawKind::AtomPlusJitter: out["law.kind"] = "atoms"; break;
    case LawKind::FileAtoms: out["law.kind"] = "file"; break;
    }
    out["law.center"] = g17(law.center.x) + " " + g17(law.center.y);
    out["law.sigma"] = g17(law.sigma);
    out["law.radius"] = g17(law.radius);
    out["law.jitter"] = g17(law.jitter);
    out["law.file"] = law.atom_file;
    std::string atoms;
    for (const auto &a : law.atoms) {
        if (!atoms.empty()) atoms += ", ";
        atoms += g17(a.w) + ":" + g17(a.x) + ":" + g17(a.y);
    }
    out["law.atoms"] = atoms;

    const DiagnosticsSelect &d = spec.diag;
    std::string sel;
    for (const auto &name : d.select) {
        if (!sel.empty()) sel += " ";
        sel += name;
    }
    out["diagnostics.select"] = sel;
    out["diagnostics.moment_gamma"] = g17(d.moment_gamma);
    out["diagnostics.triple_budget"] = std::to_string(d.triple_budget);
    out["diagnostics.residual_term"] = std::to_string(d.residual_term);
    out["diagnostics.holder_exponent"] = g17(d.holder_exponent);
    out["diagnostics.diffuse_scale"] = g17(d.diffuse_scale);
    return out;
}

} // namespace kslab
