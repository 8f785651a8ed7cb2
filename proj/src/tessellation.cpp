#include "cmc/tessellation.hpp"

#include <cmath>
#include <cstdint>
#include <deque>
#include <string>
#include <unordered_map>

#include "cmc/closed_form.hpp"
#include "cmc/errors.hpp"

namespace cmc {

namespace {

constexpr double kPi = 3.14159265358979323846264338327950288;

// quantized key of a vertex triple (dedup quantum 1e-7)
std::string triple_key(const Vec3& a, const Vec3& b, const Vec3& c) {
    char buf[200];
    auto q = [](double v) { return static_cast<long long>(std::llround(v * 1e7)); };
    std::snprintf(buf, sizeof(buf), "%lld,%lld,%lld|%lld,%lld,%lld|%lld,%lld,%lld",
                  q(a.x()), q(a.y()), q(a.z()), q(b.x()), q(b.y()), q(b.z()), q(c.x()),
                  q(c.y()), q(c.z()));
    return buf;
}

}  // namespace

TargetTriangle target_triangle(int m, int k) {
    const int eps = epsilon_of(m, k);
    if (eps == 0) throw FlatCaseError("target_triangle: flat case rejected");
    const M2 geo(eps);

    TargetTriangle T;
    T.m = m;
    T.k = k;
    T.epsilon = eps;
    T.len_VE = ell_target(m, k);
    const double q = cos_pi_over(k) / sin_pi_over(m);
    T.len_EP0 = eps == 1 ? std::acos(q) : std::acosh(q);

    T.V = m2_basepoint();
    const Vec3 dir0(1, 0, 0);
    T.E = geo.exp(T.V, dir0, T.len_VE);
    if (k == 2) {
        // birectangular case: right angles at both V and E, P0 polar to both
        T.len_VP0 = kPi / 2.0;
        T.len_EP0 = kPi / 2.0;
    } else {
        const M2::RightTriangle rt = geo.solve_right_triangle(kPi / k, T.len_VE);
        T.len_VP0 = rt.c;  // hypotenuse; rt.b re-derives len_EP0, rt.angleA = pi/m
        if (std::abs(rt.b - T.len_EP0) > 1e-9)
            throw SolveError("target_triangle: inconsistent cathetus lengths");
    }
    const Vec3 dir_hyp = geo.rotate_tangent(T.V, dir0, kPi / k);
    T.P0 = geo.exp(T.V, dir_hyp, T.len_VP0);

    const double res =
        geo.law_of_cosines_residual(geo.dist(T.E, T.P0), T.len_VE, T.len_VP0, kPi / k);
    if (res > 1e-9)
        throw SolveError("target_triangle: law-of-cosines residual " + std::to_string(res));
    return T;
}

SymmetryGroup symmetry_group(int m, int k) {
    const TargetTriangle T = target_triangle(m, k);
    const M2 geo(T.epsilon);
    SymmetryGroup G;
    G.omega = T;
    G.gens[0] = geo.reflection(T.E, T.P0);
    G.gens[1] = geo.reflection(T.V, T.E);
    G.gens[2] = geo.reflection(T.V, T.P0);

    if (T.epsilon != 1) return G;  // infinite group: generators only

    const auto gi = genus(m, k);
    std::unordered_map<std::string, int> seen;
    auto key_of = [&](const Mat3& M) {
        return triple_key(geo.apply(M, T.V), geo.apply(M, T.E), geo.apply(M, T.P0));
    };
    std::deque<int> queue;
    G.elements.push_back({Mat3::Identity(), {}, false});
    seen.emplace(key_of(Mat3::Identity()), 0);
    queue.push_back(0);
    while (!queue.empty()) {
        const int idx = queue.front();
        queue.pop_front();
        for (int gidx = 0; gidx < 3; ++gidx) {
            const GroupElement cur = G.elements[idx];
            GroupElement nxt;
            nxt.iso = G.gens[gidx] * cur.iso;  // left action: new global motion
            nxt.word = cur.word;
            nxt.word.push_back(gidx + 1);
            nxt.reverses = !cur.reverses;
            const std::string key = key_of(nxt.iso);
            auto [it, inserted] = seen.emplace(key, static_cast<int>(G.elements.size()));
            if (inserted) {
                G.elements.push_back(std::move(nxt));
                queue.push_back(static_cast<int>(G.elements.size()) - 1);
                if (static_cast<std::int64_t>(G.elements.size()) > 4 * gi.n_triangles)
                    throw SolveError("symmetry_group: dedup failure, orbit exceeds bound");
            }
        }
    }
    if (static_cast<std::int64_t>(G.elements.size()) != gi.n_triangles)
        throw SolveError("symmetry_group: enumerated " + std::to_string(G.elements.size()) +
                         " elements, expected " + std::to_string(gi.n_triangles));
    for (const auto& e : G.elements)
        if ((e.iso + Mat3::Identity()).cwiseAbs().maxCoeff() < 1e-7) G.antipodal = true;
    return G;
}

Tessellation tessellate(int m, int k, int depth) {
    const int eps = epsilon_of(m, k);
    if (eps == 0) throw FlatCaseError("tessellate: flat case rejected");
    Tessellation out;
    out.m = m;
    out.k = k;
    out.epsilon = eps;
    out.omega = target_triangle(m, k);
    const M2 geo(eps);

    if (eps == 1) {
        const SymmetryGroup G = symmetry_group(m, k);
        std::unordered_map<std::string, int> index;
        for (size_t i = 0; i < G.elements.size(); ++i) {
            const auto& e = G.elements[i];
            TessTriangle t;
            t.iso = e.iso;
            t.word = e.word;
            t.reverses = e.reverses;
            t.V = geo.apply(e.iso, out.omega.V);
            t.E = geo.apply(e.iso, out.omega.E);
            t.P0 = geo.apply(e.iso, out.omega.P0);
            index.emplace(triple_key(t.V, t.E, t.P0), static_cast<int>(i));
            out.triangles.push_back(std::move(t));
        }
        for (auto& t : out.triangles) {
            for (int g = 0; g < 3; ++g) {
                const Mat3 nb = t.iso * G.gens[g];  // neighbor across the g-th side
                const auto it = index.find(triple_key(geo.apply(nb, out.omega.V),
                                                      geo.apply(nb, out.omega.E),
                                                      geo.apply(nb, out.omega.P0)));
                if (it == index.end())
                    throw SolveError("tessellate: adjacency lookup failed (tolerance collision)");
                t.neighbor[g] = it->second;
            }
        }
        return out;
    }

    // eps == -1: breadth-first word expansion up to the given depth
    if (depth <= 0) depth = 4;
    const SymmetryGroup G = symmetry_group(m, k);
    std::unordered_map<std::string, int> seen;
    auto push_tri = [&](const Mat3& iso, std::vector<int> word, bool rev) -> int {
        TessTriangle t;
        t.iso = iso;
        t.word = std::move(word);
        t.reverses = rev;
        t.V = geo.apply(iso, out.omega.V);
        t.E = geo.apply(iso, out.omega.E);
        t.P0 = geo.apply(iso, out.omega.P0);
        const std::string key = triple_key(t.V, t.E, t.P0);
        auto [it, inserted] = seen.emplace(key, static_cast<int>(out.triangles.size()));
        if (!inserted) return it->second;
        out.triangles.push_back(std::move(t));
        return static_cast<int>(out.triangles.size()) - 1;
    };
    push_tri(Mat3::Identity(), {}, false);
    size_t frontier_begin = 0;
    for (int d = 0; d < depth; ++d) {
        const size_t frontier_end = out.triangles.size();
        for (size_t i = frontier_begin; i < frontier_end; ++i) {
            for (int g = 0; g < 3; ++g) {
                const TessTriangle t = out.triangles[i];
                auto word = t.word;
                word.push_back(g + 1);
                push_tri(t.iso * G.gens[g], std::move(word), !t.reverses);
            }
        }
        frontier_begin = frontier_end;
    }
    // adjacency where the neighbor exists in the patch
    for (auto& t : out.triangles) {
        for (int g = 0; g < 3; ++g) {
            const Mat3 nb = t.iso * G.gens[g];
            const auto it = seen.find(triple_key(geo.apply(nb, out.omega.V),
                                                 geo.apply(nb, out.omega.E),
                                                 geo.apply(nb, out.omega.P0)));
            t.neighbor[g] = it == seen.end() ? -1 : it->second;
        }
    }
    return out;
}

bool antipodal_invariant(int m, int k) {
    if (epsilon_of(m, k) != 1)
        throw RegimeError("antipodal_invariant is defined for epsilon = 1");
    return symmetry_group(m, k).antipodal;
}

}  // namespace cmc
