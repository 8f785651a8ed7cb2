#pragma once

#include <array>
#include <vector>

#include "cmc/m2.hpp"

namespace cmc {

// Target triangle Omega of the (m,k)-tessellation of M^2(eps): right angle at
// the edge midpoint E = pi(2), angle pi/k at the tessellation vertex V = pi(3),
// angle pi/m at the polygon center p0. The side V -> E has length ell_target.
struct TargetTriangle {
    int m = 0, k = 0, epsilon = 0;
    Vec3 V, E, P0;
    double len_VE = 0.0;   // = ell_target(m,k)
    double len_EP0 = 0.0;  // cathetus adjacent to pi/m
    double len_VP0 = 0.0;  // hypotenuse
};

TargetTriangle target_triangle(int m, int k);

struct GroupElement {
    Mat3 iso = Mat3::Identity();
    std::vector<int> word;  // generator indices, 1..3 (sides h1,h2,h3)
    bool reverses = false;  // orientation-reversing on M^2(eps)
};

// Reflection group of the (m,k)-tessellation acting on M^2(eps).
// gens[0] fixes geodesic(E,P0) (the h1 plane), gens[1] fixes geodesic(V,E)
// (the h2 plane), gens[2] fixes geodesic(V,P0) (the h3 plane). For eps == 1
// `elements` enumerates the full group (order = n_triangles).
struct SymmetryGroup {
    TargetTriangle omega;
    std::array<Mat3, 3> gens;
    std::vector<GroupElement> elements;
    bool antipodal = false;  // contains -Id (eps == 1)
};

SymmetryGroup symmetry_group(int m, int k);

struct TessTriangle {
    Mat3 iso;
    std::vector<int> word;
    Vec3 V, E, P0;
    std::array<int, 3> neighbor = {-1, -1, -1};  // across sides h1,h2,h3
    bool reverses = false;
};

struct Tessellation {
    int m = 0, k = 0, epsilon = 0;
    TargetTriangle omega;
    std::vector<TessTriangle> triangles;
};

// Orbit of Omega. For eps == 1 the full tessellation (depth ignored); for
// eps == -1 a word-length-bounded patch.
Tessellation tessellate(int m, int k, int depth = 0);

// True iff the symmetry group contains the antipodal map (eps == 1 only).
bool antipodal_invariant(int m, int k);

}  // namespace cmc
