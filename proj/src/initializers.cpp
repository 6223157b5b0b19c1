#include "kslab/initializers.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "kslab/rng.hpp"

namespace kslab {

Vec2 clamp_chi(Vec2 p, double bound) {
    if (!(bound > 0.0)) throw std::invalid_argument("clamp_chi: bound must be > 0");
    p.x = std::min(std::max(p.x, -bound), bound);
    p.y = std::min(std::max(p.y, -bound), bound);
    return p;
}

InitialLaw load_atom_file(const std::string &path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("load_atom_file: cannot open " + path);
    InitialLaw law;
    law.kind = LawKind::FileAtoms;
    law.atom_file = path;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
        std::istringstream ls(line);
        Atom a;
        if (!(ls >> a.w >> a.x >> a.y))
            throw std::invalid_argument("load_atom_file: bad line " + std::to_string(lineno));
        std::string trailing;
        if (ls >> trailing)
            throw std::invalid_argument("load_atom_file: trailing tokens on line " + std::to_string(lineno));
        if (!(a.w > 0.0))
            throw std::invalid_argument("load_atom_file: weight must be > 0 on line " + std::to_string(lineno));
        law.atoms.push_back(a);
    }
    if (law.atoms.empty()) throw std::invalid_argument("load_atom_file: no atoms in " + path);
    return law;
}

namespace {

void validate_law(const InitialLaw &law) {
    switch (law.kind) {
    case LawKind::GaussianIID:
        if (!(law.sigma > 0.0)) throw std::invalid_argument("initial law: sigma must be > 0");
        break;
    case LawKind::UniformDiskIID:
        if (!(law.radius > 0.0)) throw std::invalid_argument("initial law: radius must be > 0");
        break;
    case LawKind::AtomPlusJitter:
        if (!(law.jitter > 0.0)) throw std::invalid_argument("initial law: jitter must be > 0");
        [[fallthrough]];
    case LawKind::FileAtoms:
        if (law.atoms.empty()) throw std::invalid_argument("initial law: atom list is empty");
        for (const auto &a : law.atoms)
            if (!(a.w > 0.0)) throw std::invalid_argument("initial law: atom weights must be > 0");
        break;
    }
}

int pick_atom(const std::vector<double> &cum, double u) {
    auto it = std::upper_bound(cum.begin(), cum.end(), u * cum.back());
    return static_cast<int>(std::min<std::ptrdiff_t>(it - cum.begin(),
                                                     static_cast<std::ptrdiff_t>(cum.size()) - 1));
}

} // namespace

int ensure_pairwise_distinct(std::vector<Vec2> &pts,
                             const std::function<Vec2(int, int)> &redraw, int max_rounds) {
    const int n = static_cast<int>(pts.size());
    std::vector<int> order(n);
    for (int round = 0;; ++round) {
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](int a, int b) {
            if (pts[a].x != pts[b].x) return pts[a].x < pts[b].x;
            return pts[a].y < pts[b].y;
        });
        std::vector<int> dupes;
        for (int i = 1; i < n; ++i)
            if (pts[order[i]] == pts[order[i - 1]]) dupes.push_back(order[i]);
        if (dupes.empty()) return round;
        if (round >= max_rounds)
            throw std::runtime_error("sample_initial: duplicate points persisted after " +
                                     std::to_string(max_rounds) + " resampling rounds");
        // pass r uses sub-seed round r; round 0 belongs to the initial draw
        for (int idx : dupes) pts[idx] = redraw(idx, round + 1);
    }
}

std::vector<Vec2> sample_initial(const InitialLaw &law, int n, std::uint64_t seed) {
    if (n < 5) throw std::invalid_argument("sample_initial: need n >= 5");
    validate_law(law);

    std::vector<double> cum;
    if (law.kind == LawKind::AtomPlusJitter || law.kind == LawKind::FileAtoms) {
        cum.resize(law.atoms.size());
        double s = 0.0;
        for (std::size_t i = 0; i < law.atoms.size(); ++i) {
            s += law.atoms[i].w;
            cum[i] = s;
        }
    }

    const double bound = static_cast<double>(n);
    const double perturb = 1.0 / static_cast<double>(n);

    // round r >= 1 re-derives the point with a fresh sub-seed; round 0 is the
    // plain draw, so each point is a pure function of (seed, index, round).
    auto draw = [&](int i, int round) -> Vec2 {
        std::mt19937_64 eng(derive_seed(seed, static_cast<std::uint64_t>(i),
                                        static_cast<std::uint64_t>(round)));
        std::normal_distribution<double> gauss(0.0, 1.0);
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        Vec2 p;
        switch (law.kind) {
        case LawKind::GaussianIID:
            p = law.center + Vec2{law.sigma * gauss(eng), law.sigma * gauss(eng)};
            return clamp_chi(p, bound);
        case LawKind::UniformDiskIID: {
            const double rho = law.radius * std::sqrt(unif(eng));
            const double ang = 2.0 * std::acos(-1.0) * unif(eng);
            p = law.center + Vec2{rho * std::cos(ang), rho * std::sin(ang)};
            return clamp_chi(p, bound);
        }
        case LawKind::AtomPlusJitter:
        case LawKind::FileAtoms: {
            const Atom &a = law.atoms[pick_atom(cum, unif(eng))];
            p = {a.x, a.y};
            if (law.kind == LawKind::AtomPlusJitter)
                p += Vec2{law.jitter * gauss(eng), law.jitter * gauss(eng)};
            p = clamp_chi(p, bound);
            // distinctness perturbation, applied after the clamp
            p += Vec2{perturb * gauss(eng), perturb * gauss(eng)};
            return p;
        }
        }
        throw std::logic_error("sample_initial: unreachable");
    };

    std::vector<Vec2> pts(n);
    for (int i = 0; i < n; ++i) pts[i] = draw(i, 0);
    ensure_pairwise_distinct(pts, [&](int i, int round) { return draw(i, round); });
    return pts;
}

double sixth_moment(const std::vector<Vec2> &pts) {
    if (pts.empty()) return 0.0;
    double s = 0.0;
    for (const auto &p : pts) {
        const double n2 = p.norm2();
        s += n2 * n2 * n2;
    }
    return s / static_cast<double>(pts.size());
}

} // namespace kslab
