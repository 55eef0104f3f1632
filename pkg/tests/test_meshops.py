import numpy as np
import pytest

from brickforge import BrickBitmask, CellDimensions, Profile, Side, ValidationError, VoxelSolid
from brickforge.errors import MeshContractError
from brickforge.mesh import analyze, shell_count, signed_volume
from brickforge.meshops import (
    Primitive,
    PrimitiveKind,
    lattice,
    merge_primitive,
    primitive_mesh,
    scale,
    smooth,
    surface_lattice_edges,
    voxelize_mesh,
)
from brickforge.reconstruct import ExtrudeParams, extrude, solid_to_mesh

from conftest import assert_mesh_hygiene, random_box_union_solid

CELL10 = CellDimensions(10.0, 10.0, 10.0)


def unit_cube_mesh(edge=1.0, center=(0.0, 0.0, 0.0)):
    return primitive_mesh(Primitive(PrimitiveKind.CUBE, center, edge))


class TestSmooth:
    def test_zero_factors_are_identity(self):
        mesh = unit_cube_mesh(10.0)
        out = smooth(mesh, iterations=4, lam=0.0, mu=0.0)
        assert bool(np.array_equal(out.vertices, mesh.vertices))

    def test_unit_cube_volume_band(self):
        # a unit cube tessellated at 4x4 faces per side
        occ = np.ones((4, 4, 4), dtype=bool)
        mesh = solid_to_mesh(VoxelSolid(occ, CellDimensions(0.25, 0.25, 0.25)))
        assert signed_volume(mesh) == pytest.approx(1.0, rel=1e-12)
        out = smooth(mesh, 10)
        assert 0.95 <= signed_volume(out) <= 1.05

    def test_counts_and_connectivity_unchanged(self, rng):
        mesh = solid_to_mesh(VoxelSolid(random_box_union_solid(rng, max_dim=8), CELL10))
        out = smooth(mesh, 10)
        assert out.vertex_count() == mesh.vertex_count()
        assert out.triangle_count() == mesh.triangle_count()
        assert bool(np.array_equal(out.triangles, mesh.triangles))
        assert shell_count(out) == shell_count(mesh)
        assert_mesh_hygiene(out)

    def test_ring_extrusion_keeps_genus(self):
        mask = BrickBitmask.from_text("3 3\n###\n#.#\n###\n")
        mesh = extrude(Profile(mask, Side.FRONT, CELL10), ExtrudeParams(depth_cells=1))
        out = smooth(mesh, 10)
        assert analyze(out).euler_characteristic == 0

    def test_rejects_open_shell(self):
        from brickforge.mesh import TriangleMesh

        cube = unit_cube_mesh()
        opened = TriangleMesh(cube.vertices, cube.triangles[:-1])
        with pytest.raises(MeshContractError):
            smooth(opened, 1)

    def test_iteration_validation(self):
        with pytest.raises(ValidationError):
            smooth(unit_cube_mesh(), 0)


class TestScale:
    def test_factor_one_bit_identical(self, rng):
        mesh = solid_to_mesh(VoxelSolid(random_box_union_solid(rng, max_dim=6), CELL10))
        out = scale(mesh, 1.0)
        assert bool(np.array_equal(out.vertices, mesh.vertices))

    def test_cubic_volume_scaling(self):
        mesh = unit_cube_mesh(10.0)  # 1000 mm^3
        assert signed_volume(scale(mesh, 2.0)) == pytest.approx(8000.0, rel=1e-12)

    def test_random_factor_cubes_volume(self, rng):
        mesh = solid_to_mesh(VoxelSolid(random_box_union_solid(rng, max_dim=6), CELL10))
        v0 = signed_volume(mesh)
        for _ in range(3):
            f = float(rng.uniform(0.2, 3.0))
            assert signed_volume(scale(mesh, f)) / v0 == pytest.approx(f**3, rel=1e-9)

    def test_composition(self, rng):
        mesh = solid_to_mesh(VoxelSolid(random_box_union_solid(rng, max_dim=5), CELL10))
        a = scale(scale(mesh, 1.7), 0.4)
        b = scale(mesh, 1.7 * 0.4)
        assert np.abs(a.vertices - b.vertices).max() < 1e-9

    @pytest.mark.parametrize("factor", [0.0, -1.0, float("nan")])
    def test_invalid_factor(self, factor):
        with pytest.raises(ValidationError):
            scale(unit_cube_mesh(), factor)


class TestLattice:
    def test_single_voxel_wireframe_cube(self):
        solid = VoxelSolid(np.ones((1, 1, 1), dtype=bool), CELL10)
        edges = surface_lattice_edges(solid.occupancy)
        assert len(edges) == 12
        mesh = lattice(solid, 2.0)
        assert_mesh_hygiene(mesh)
        assert shell_count(mesh) == 1
        assert signed_volume(mesh) < 1000.0

    def test_block_strut_graph_matches_boundary_edges(self):
        solid = VoxelSolid(np.ones((2, 2, 2), dtype=bool), CELL10)
        edges = surface_lattice_edges(solid.occupancy)
        # oracle: enumerate boundary faces by neighbor check, collect edges
        expected = set()
        occ = solid.occupancy
        for x in range(2):
            for y in range(2):
                for z in range(2):
                    if not occ[x, y, z]:
                        continue
                    for axis, d in ((0, 1), (0, -1), (1, 1), (1, -1), (2, 1), (2, -1)):
                        n = [x, y, z]
                        n[axis] += d
                        if 0 <= n[axis] < 2 and occ[tuple(n)]:
                            continue
                        base = [x, y, z]
                        if d > 0:
                            base[axis] += 1
                        u, w = [i for i in range(3) if i != axis]
                        for corner_axis, other_axis in ((u, w), (w, u)):
                            for step in (0, 1):
                                pt = list(base)
                                pt[other_axis] += step
                                expected.add((tuple(pt), corner_axis))
        assert edges == expected
        mesh = lattice(solid, 2.0)
        assert_mesh_hygiene(mesh)
        assert shell_count(mesh) == 1

    def test_random_connected_solids(self, rng):
        for _ in range(5):
            occ = random_box_union_solid(rng, max_dim=6)
            solid = VoxelSolid(occ, CELL10)
            mesh = lattice(solid, 2.0)
            assert_mesh_hygiene(mesh)
            assert shell_count(mesh) == 1
            assert signed_volume(mesh) < occ.sum() * 1000.0

    def test_cavity_faces_excluded(self):
        occ = np.ones((4, 4, 4), dtype=bool)
        occ[1:3, 1:3, 1:3] = False  # enclosed cavity
        solid = VoxelSolid(occ, CELL10)
        mesh = lattice(solid, 2.0)
        assert shell_count(mesh) == 1  # cavity contributes no struts

    def test_thickness_validation(self):
        solid = VoxelSolid(np.ones((1, 1, 1), dtype=bool), CELL10)
        with pytest.raises(ValidationError):
            lattice(solid, 10.0)
        with pytest.raises(ValidationError):
            lattice(solid, 0.0)

    def test_disconnected_solid_rejected(self):
        occ = np.zeros((3, 1, 1), dtype=bool)
        occ[0] = occ[2] = True
        with pytest.raises(ValidationError):
            lattice(VoxelSolid(occ, CELL10), 2.0)


class TestMergePrimitive:
    def test_identical_cubes_idempotent(self):
        edge = 10.0
        mesh = unit_cube_mesh(edge)
        out = merge_primitive(mesh, Primitive(PrimitiveKind.CUBE, (0, 0, 0), edge), 1.0)
        assert_mesh_hygiene(out)
        tolerance = 2 * 1.0 / edge  # 2 * resolution / edge, relative
        assert signed_volume(out) == pytest.approx(edge**3, rel=tolerance)

    def test_disjoint_cubes_two_shells_with_warning(self):
        mesh = unit_cube_mesh(10.0)
        out = merge_primitive(mesh, Primitive(PrimitiveKind.CUBE, (30, 0, 0), 10.0), 1.0)
        assert shell_count(out) == 2
        assert any("disjoint-union" in w for w in out.warnings)
        assert signed_volume(out) == pytest.approx(2000.0, rel=0.2)

    def test_half_overlap_inclusion_exclusion(self):
        edge = 10.0
        mesh = unit_cube_mesh(edge)
        prim = Primitive(PrimitiveKind.CUBE, (edge / 2, 0, 0), edge)
        out = merge_primitive(mesh, prim, 1.0)
        # inclusion-exclusion oracle on an independent voxel grid
        res = 1.0
        xs = np.arange(-6, 16, res) + res / 2
        grid = np.stack(np.meshgrid(xs, xs, xs, indexing="ij"), axis=-1)
        in_a = (np.abs(grid - np.array([0, 0, 0])) <= edge / 2).all(axis=-1)
        in_b = (np.abs(grid - np.array([edge / 2, 0, 0])) <= edge / 2).all(axis=-1)
        expected = (in_a | in_b).sum() * res**3
        assert signed_volume(out) == pytest.approx(expected, rel=0.1)
        assert signed_volume(out) == pytest.approx(1.5 * edge**3, rel=0.1)
        assert_mesh_hygiene(out)

    def test_sphere_merge_watertight(self):
        mesh = unit_cube_mesh(10.0)
        out = merge_primitive(mesh, Primitive(PrimitiveKind.SPHERE, (6, 0, 0), 10.0), 0.8)
        assert_mesh_hygiene(out)
        assert signed_volume(out) > signed_volume(mesh) - 2 * 0.8 * 100

    def test_commutative_up_to_sampling(self):
        a = unit_cube_mesh(10.0)
        b_prim = Primitive(PrimitiveKind.CUBE, (4, 3, 0), 8.0)
        v1 = signed_volume(merge_primitive(a, b_prim, 1.0))
        b_mesh = primitive_mesh(b_prim)
        a_prim = Primitive(PrimitiveKind.CUBE, (0, 0, 0), 10.0)
        v2 = signed_volume(merge_primitive(b_mesh, a_prim, 1.0))
        assert v1 == pytest.approx(v2, rel=0.05)

    def test_resolution_too_coarse(self):
        mesh = unit_cube_mesh(2.0)
        with pytest.raises(ValidationError):
            merge_primitive(mesh, Primitive(PrimitiveKind.CUBE, (0, 0, 0), 2.0), 5.0)

    def test_result_volume_at_least_each_input(self):
        mesh = unit_cube_mesh(10.0)
        prim = Primitive(PrimitiveKind.SPHERE, (3, 3, 3), 12.0)
        out = merge_primitive(mesh, prim, 1.0)
        sphere_volume = signed_volume(primitive_mesh(prim))
        slack = 0.15
        assert signed_volume(out) >= (1 - slack) * max(1000.0, sphere_volume)


class TestVoxelizeMesh:
    def test_cube_fills_expected_cells(self):
        mesh = unit_cube_mesh(10.0, center=(5.0, 5.0, 5.0))
        occ = voxelize_mesh(mesh, np.array([-1.0, -1.0, -1.0]), 1.0, (12, 12, 12))
        assert occ.sum() == pytest.approx(1000, abs=60)

    def test_watertight_parity_is_solid(self):
        # sphere voxelization should approximate the ball volume
        mesh = primitive_mesh(Primitive(PrimitiveKind.SPHERE, (0, 0, 0), 10.0, resolution=48))
        occ = voxelize_mesh(mesh, np.array([-6.0, -6.0, -6.0]), 0.5, (24, 24, 24))
        import math

        ball = 4 / 3 * math.pi * 5**3
        assert occ.sum() * 0.125 == pytest.approx(ball, rel=0.05)
