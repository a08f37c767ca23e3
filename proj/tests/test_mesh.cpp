#include "thermopt/mesh.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

using namespace thermopt;

namespace {

TagRule x0_dirichlet() { return TagRule{{BoxSide{0, 0}}}; }

int count_tag(const Mesh& m, BoundaryTag tag) {
  int n = 0;
  for (const auto& f : m.facets()) n += f.tag == tag;
  return n;
}

}  // namespace

TEST(Mesh, UnitSquareCounts) {
  const Mesh m = build_rectangle_mesh({1, 1}, {2, 2}, TagRule::all_dirichlet(2));
  EXPECT_EQ(m.num_vertices(), 9);
  EXPECT_EQ(m.num_cells(), 8);
  EXPECT_EQ(m.num_facets(), 8);
}

TEST(Mesh, TagRuleSplitsBoundary) {
  const Mesh m = build_rectangle_mesh({1, 1}, {2, 2}, x0_dirichlet());
  EXPECT_EQ(count_tag(m, BoundaryTag::DirichletTemperature), 2);
  EXPECT_EQ(count_tag(m, BoundaryTag::RobinTemperature), 6);
  EXPECT_EQ(m.robin_facets().size(), 6u);
}

TEST(Mesh, UnitCubeKuhnSplit) {
  const Mesh m = build_rectangle_mesh({1, 1, 1}, {1, 1, 1}, TagRule::all_dirichlet(3));
  EXPECT_EQ(m.num_vertices(), 8);
  EXPECT_EQ(m.num_cells(), 6);
  EXPECT_EQ(m.num_facets(), 12);
  EXPECT_NEAR(m.volume(), 1.0, 1e-14);
  EXPECT_NEAR(boundary_measure(m), 6.0, 1e-14);
}

TEST(Mesh, BoundaryMeasures) {
  const Mesh m = build_rectangle_mesh({1, 1}, {4, 4}, x0_dirichlet());
  EXPECT_NEAR(boundary_measure(m), 4.0, 1e-14);
  EXPECT_NEAR(boundary_measure(m, BoundaryTag::DirichletTemperature), 1.0, 1e-14);
  EXPECT_NEAR(boundary_measure(m, BoundaryTag::RobinTemperature), 3.0, 1e-14);
}

TEST(Mesh, VolumeMatchesExtents) {
  const Mesh m2 = build_rectangle_mesh({2.0, 0.5}, {5, 3}, x0_dirichlet());
  EXPECT_NEAR(m2.volume(), 1.0, 1e-12);
  const Mesh m3 = build_rectangle_mesh({1.5, 2.0, 0.25}, {3, 2, 2}, x0_dirichlet());
  EXPECT_NEAR(m3.volume(), 0.75, 1e-12);
  for (int c = 0; c < m3.num_cells(); ++c) EXPECT_GT(m3.cell_volume(c), 0.0);
}

TEST(Mesh, RefinementCountsAndConservation) {
  const Mesh m = build_rectangle_mesh({1, 1}, {2, 2}, x0_dirichlet());
  const Mesh r = refine_uniform(m);
  EXPECT_EQ(r.num_vertices(), 25);
  EXPECT_EQ(r.num_cells(), 32);
  EXPECT_NEAR(r.volume(), 1.0, 1e-12);
  EXPECT_NEAR(boundary_measure(r, BoundaryTag::RobinTemperature), 3.0, 1e-12);
  const Mesh rr = refine_uniform(r);
  EXPECT_NEAR(r.max_cell_diameter(), 0.5 * m.max_cell_diameter(), 1e-14);
  EXPECT_NEAR(rr.max_cell_diameter(), 0.25 * m.max_cell_diameter(), 1e-14);
}

TEST(Mesh, RefinementIn3D) {
  const Mesh m = build_rectangle_mesh({1, 1, 1}, {1, 1, 1}, x0_dirichlet());
  const Mesh r = refine_uniform(m);
  EXPECT_EQ(r.num_cells(), 48);
  EXPECT_EQ(r.num_vertices(), 27);
  EXPECT_NEAR(r.volume(), 1.0, 1e-12);
  EXPECT_NEAR(boundary_measure(r, BoundaryTag::DirichletTemperature), 1.0, 1e-12);
  EXPECT_NEAR(boundary_measure(r), 6.0, 1e-12);
}

TEST(Mesh, ProlongationReproducesLinears) {
  const Mesh m = build_rectangle_mesh({1, 1}, {3, 3}, x0_dirichlet());
  std::vector<std::array<int, 2>> parents;
  const Mesh r = refine_uniform(m, &parents);
  Vector coarse(m.num_vertices());
  for (int v = 0; v < m.num_vertices(); ++v) coarse[v] = 2 * m.vertex(v)[0] - m.vertex(v)[1];
  const Vector fine = prolongate(parents, coarse);
  for (int v = 0; v < r.num_vertices(); ++v) EXPECT_NEAR(fine[v], 2 * r.vertex(v)[0] - r.vertex(v)[1], 1e-14);
}

TEST(Mesh, OutwardNormals) {
  const Mesh m = build_rectangle_mesh({1, 1}, {2, 2}, x0_dirichlet());
  for (int f = 0; f < m.num_facets(); ++f) {
    const Point c = m.facet_centroid(f);
    const Point n = m.facet_normal(f);
    // The outward normal points away from the box center.
    EXPECT_GT((c[0] - 0.5) * n[0] + (c[1] - 0.5) * n[1], 0.0);
    EXPECT_NEAR(std::hypot(n[0], n[1]), 1.0, 1e-14);
  }
}

TEST(Mesh, RightTrianglesAreNonobtuse) {
  const Mesh m = build_rectangle_mesh({1, 1}, {4, 4}, x0_dirichlet());
  for (const auto& c : m.cells()) {
    for (int i = 0; i < 3; ++i) {
      const Point& a = m.vertex(c[i]);
      const Point& b = m.vertex(c[(i + 1) % 3]);
      const Point& d = m.vertex(c[(i + 2) % 3]);
      EXPECT_GE((b[0] - a[0]) * (d[0] - a[0]) + (b[1] - a[1]) * (d[1] - a[1]), -1e-14);
    }
  }
}

TEST(Mesh, RejectsInvalidInput) {
  EXPECT_THROW(build_rectangle_mesh({1, 1}, {2, 2}, TagRule{}), ConfigError);
  EXPECT_THROW(build_rectangle_mesh({1, 1}, {0, 2}, x0_dirichlet()), ConfigError);
  EXPECT_THROW(build_rectangle_mesh({1, -1}, {2, 2}, x0_dirichlet()), ConfigError);
  EXPECT_THROW(build_rectangle_mesh({1, 1, 1, 1}, {1, 1, 1, 1}, x0_dirichlet()), ConfigError);
  // Inverted triangle.
  EXPECT_THROW(Mesh(2, {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}}, {{0, 2, 1, -1}},
                    {{{0, 1, -1}, BoundaryTag::DirichletTemperature},
                     {{1, 2, -1}, BoundaryTag::RobinTemperature},
                     {{2, 0, -1}, BoundaryTag::RobinTemperature}}),
               ConfigError);
  // Missing boundary facet.
  EXPECT_THROW(Mesh(2, {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}}, {{0, 1, 2, -1}},
                    {{{0, 1, -1}, BoundaryTag::DirichletTemperature}, {{1, 2, -1}, BoundaryTag::RobinTemperature}}),
               ConfigError);
}

TEST(Mesh, BoxSideParsing) {
  EXPECT_EQ(parse_box_side("y1"), (BoxSide{1, 1}));
  EXPECT_EQ(parse_box_side("z0"), (BoxSide{2, 0}));
  EXPECT_FALSE(parse_box_side("w0"));
  EXPECT_FALSE(parse_box_side("x2"));
  EXPECT_EQ(parse_boundary_tag("robin"), BoundaryTag::RobinTemperature);
  EXPECT_EQ(parse_boundary_tag("DirichletTemperature"), BoundaryTag::DirichletTemperature);
  EXPECT_FALSE(parse_boundary_tag("neumann"));
}

TEST(Mesh, FileRoundTrip) {
  const Mesh m = build_rectangle_mesh({1, 2, 1}, {2, 1, 1}, TagRule{{BoxSide{2, 1}}});
  std::stringstream ss;
  write_mesh(ss, m);
  const Mesh back = read_mesh(ss);
  EXPECT_EQ(back.num_vertices(), m.num_vertices());
  EXPECT_EQ(back.num_cells(), m.num_cells());
  EXPECT_EQ(back.num_facets(), m.num_facets());
  EXPECT_NEAR(boundary_measure(back, BoundaryTag::DirichletTemperature), 2.0, 1e-12);
}

TEST(Mesh, FileReaderReportsLines) {
  std::istringstream bad("DIM 2\nVERTICES 3\n0 0\n1 0\n0 1\nCELLS 1\n0 1 2\nFACETS 3\n0 1 dirichlet\n1 2 robin\n2 0 lava\n");
  try {
    (void)read_mesh(bad);
    FAIL() << "expected a parse error";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("line 11"), std::string::npos) << e.what();
  }
  std::istringstream good("# triangle\nDIM 2\nVERTICES 3\n0 0\n1 0\n0 1\nCELLS 1\n0 1 2\nFACETS 3\n0 1 dirichlet\n1 2 robin\n2 0 robin\n");
  EXPECT_EQ(read_mesh(good).num_cells(), 1);
}
