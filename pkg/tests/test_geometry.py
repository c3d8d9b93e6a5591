"""Boundary classification, time reversal, and slab bookkeeping."""

import itertools

import pytest

from mirrorslab.geometry import (
    BoundaryClass,
    PhasePoint,
    SlabGeometry,
    Velocity,
    canonical_entry,
    classify,
    reverse_boundary,
    velocities,
)


def vel(axis, sign):
    return Velocity(axis, sign)


class TestVelocity:
    def test_index_round_trip(self):
        for d in (2, 3, 4):
            for v in velocities(d):
                assert Velocity.from_index(v.index) == v

    def test_exactly_2d_values(self):
        assert len(set(velocities(3))) == 6

    def test_negation_is_involution(self):
        for v in velocities(3):
            assert -(-v) == v
            assert (-v).index == v.index ^ 1

    def test_rejects_bad_sign(self):
        with pytest.raises(ValueError):
            Velocity(0, 2)


class TestClassify:
    def test_spec_examples_d3(self):
        geom = SlabGeometry(3, 4, 8)
        assert classify(geom, PhasePoint((5, 1, 1), vel(0, 1))) is BoundaryClass.OUT_RIGHT
        assert classify(geom, PhasePoint((1, 1, 1), vel(0, 1))) is BoundaryClass.IN_RIGHTWARD
        assert classify(geom, PhasePoint((2, 3, 3), vel(1, -1))) is BoundaryClass.INTERIOR

    def test_non_entering_edge_state_is_interior(self):
        geom = SlabGeometry(3, 4, 8)
        assert classify(geom, PhasePoint((1, 2, 2), vel(1, 1))) is BoundaryClass.INTERIOR
        assert classify(geom, PhasePoint((4, 2, 2), vel(0, 1))) is BoundaryClass.INTERIOR

    def test_rejects_out_of_range_transport(self):
        geom = SlabGeometry(3, 4, 8)
        with pytest.raises(ValueError):
            classify(geom, PhasePoint((6, 1, 1), vel(0, 1)))
        with pytest.raises(ValueError):
            classify(geom, PhasePoint((-1, 1, 1), vel(0, -1)))

    def test_partition_of_boundary_columns(self):
        # every state on columns {0, 1, N, N+1} lands in exactly the class the
        # face definitions prescribe
        geom = SlabGeometry(2, 2, 2)
        for q1 in (0, 1, 2, 3):
            for q2 in (1, 2):
                for v in velocities(2):
                    x = PhasePoint((q1, q2), v)
                    in_slab = 1 <= q1 <= geom.width
                    if q1 == 0 or q1 == geom.width + 1:
                        reachable = v.axis == 0 and v.sign == (-1 if q1 == 0 else 1)
                        if not reachable:
                            with pytest.raises(ValueError):
                                classify(geom, x)
                            continue
                    cls = classify(geom, x)
                    assert (cls is BoundaryClass.OUT_LEFT) == (
                        q1 == 0 and v == vel(0, -1))
                    assert (cls is BoundaryClass.OUT_RIGHT) == (
                        q1 == geom.width + 1 and v == vel(0, 1))
                    assert (cls is BoundaryClass.IN_RIGHTWARD) == (
                        q1 == 1 and v == vel(0, 1))
                    assert (cls is BoundaryClass.IN_LEFTWARD) == (
                        q1 == geom.width and v == vel(0, -1))
                    if cls is BoundaryClass.INTERIOR:
                        assert in_slab


class TestReverseBoundary:
    def test_spec_examples(self):
        geom = SlabGeometry(3, 4, 8)
        x = PhasePoint((1, 1, 1), vel(0, 1))
        assert reverse_boundary(geom, x) == PhasePoint((0, 1, 1), vel(0, -1))
        y = PhasePoint((5, 2, 2), vel(0, 1))
        assert reverse_boundary(geom, y) == PhasePoint((4, 2, 2), vel(0, -1))

    def _boundary_states(self, geom):
        out = []
        transverse = itertools.product(*[range(1, geom.transverse + 1)] * (geom.dim - 1))
        for rest in transverse:
            out.append(PhasePoint((1,) + rest, vel(0, 1)))
            out.append(PhasePoint((geom.width,) + rest, vel(0, -1)))
            out.append(PhasePoint((0,) + rest, vel(0, -1)))
            out.append(PhasePoint((geom.width + 1,) + rest, vel(0, 1)))
        return out

    def test_involution_and_bijection(self):
        geom = SlabGeometry(2, 3, 4)
        incoming = {BoundaryClass.IN_RIGHTWARD, BoundaryClass.IN_LEFTWARD}
        images = set()
        for x in self._boundary_states(geom):
            y = reverse_boundary(geom, x)
            assert reverse_boundary(geom, y) == x
            # entering <-> outgoing swap
            assert (classify(geom, x) in incoming) != (classify(geom, y) in incoming)
            if classify(geom, x) in incoming:
                images.add(y)
        outgoing = {
            x for x in self._boundary_states(geom)
            if classify(geom, x) not in incoming
        }
        assert images == outgoing

    def test_rejects_interior(self):
        geom = SlabGeometry(2, 3, 4)
        with pytest.raises(ValueError):
            reverse_boundary(geom, PhasePoint((2, 2), vel(1, 1)))


class TestGeometry:
    def test_canonical_entry(self):
        geom = SlabGeometry(3, 4, 8)
        x = canonical_entry(geom)
        assert x == PhasePoint((1, 1, 1), vel(0, 1))
        assert classify(geom, x) is BoundaryClass.IN_RIGHTWARD
        assert canonical_entry(SlabGeometry(2, 1, 2)) == PhasePoint((1, 1), vel(0, 1))

    def test_wrap_preserves_transport_axis(self):
        geom = SlabGeometry(3, 4, 8)
        assert geom.wrap((2, 0, 9)) == (2, 8, 1)
        assert geom.wrap((0, 5, 5)) == (0, 5, 5)

    def test_translate_wraps(self):
        geom = SlabGeometry(2, 1, 2)
        assert geom.translate((1, 1), vel(1, -1)) == (1, 2)
        assert geom.translate((1, 2), vel(1, 1)) == (1, 1)

    def test_site_index_order(self):
        geom = SlabGeometry(2, 2, 3)
        listed = list(geom.sites())
        assert len(listed) == geom.site_count
        assert [geom.site_index(s) for s in listed] == list(range(geom.site_count))

    def test_counts(self):
        geom = SlabGeometry(3, 4, 8)
        assert geom.site_count == 8 * 8 * 4
        assert geom.phase_space_size == 6 * 8 * 8 * 4
        assert geom.step_bound == 2 * 3 * 8 * 8 * 4

    def test_rejects_bad_dimensions(self):
        with pytest.raises(ValueError):
            SlabGeometry(1, 4, 8)
        with pytest.raises(ValueError):
            SlabGeometry(2, 0, 8)
        with pytest.raises(ValueError):
            SlabGeometry(2, 4, 0)
