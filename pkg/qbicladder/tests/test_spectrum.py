import numpy as np
import pytest
from pydantic import ValidationError

from qbicladder.errors import ConvergenceError, OnCutError, SpuriousRootError
from qbicladder.model import CHANNELS, Channel, ModelParams
from qbicladder.polynomial import EPS
from qbicladder.spectrum import (
    REFINE_TOL,
    STALL_FACTOR,
    Eigenstate,
    SheetId,
    StateKind,
    assign_labels,
    branch_amplitude,
    branch_residual,
    classify_root,
    dot_seeds,
    find_state,
    newton_refine,
    reduce_wave_number,
    residual_derivative,
    rounding_floor,
    solve_one_channel,
    solve_spectrum,
    spectrum_frame,
    wave_number_distance,
    wave_numbers,
)
from qbicladder.resources.testing import (
    CANONICAL,
    CANONICAL_LABELS,
    CANONICAL_STATES,
    ONE_CHANNEL_MINUS,
    Q4_DECAY_RATE,
    SHEET_COUNTS,
    random_params,
)
from qbicladder.wavefunction import build_profile, verify_schroedinger


@pytest.fixture(scope="module")
def canonical_states():
    return solve_spectrum(CANONICAL)


def assert_at_rounding_floor(params: ModelParams, states: list[Eigenstate]):
    for s in states:
        if s.edge_degenerate:
            continue
        res = abs(branch_residual(params, s.energy, s.k_plus, s.k_minus))
        deriv = residual_derivative(params, s.energy, s.k_plus, s.k_minus)
        assert res <= max(REFINE_TOL, STALL_FACTOR * rounding_floor(s.energy, deriv)), s.name


def table_state(label: str) -> Eigenstate:
    energy, k_plus, k_minus, sheet = CANONICAL_STATES[label]
    sheet = SheetId(sheet)
    return Eigenstate(
        energy=energy,
        k_plus=k_plus,
        k_minus=k_minus,
        sheet=sheet,
        residual=0.0,
        kind=StateKind.resonant if energy.imag < 0 else StateKind.antiresonant,
    )


class TestSheets:
    def test_from_wave_numbers(self):
        assert SheetId.from_wave_numbers(1j, 2j) is SheetId.I
        assert SheetId.from_wave_numbers(-1j, 2j) is SheetId.II
        assert SheetId.from_wave_numbers(1j, -2j) is SheetId.III
        assert SheetId.from_wave_numbers(-1j, -2j) is SheetId.IV

    def test_letters(self):
        assert [s.letter for s in SheetId] == ["P", "Q", "R", "S"]
        assert SheetId.III.signs == (1, -1)
        assert SheetId.II.sign(Channel.plus) == -1
        assert SheetId.II.sign(Channel.minus) == 1


class TestWaveNumbers:
    def test_reduce(self):
        assert reduce_wave_number(1.5 * np.pi + 1j) == pytest.approx(-0.5 * np.pi + 1j)
        assert reduce_wave_number(complex(np.pi, 0.1)).real == pytest.approx(np.pi)
        assert reduce_wave_number(complex(-np.pi, 0.1)).real == pytest.approx(np.pi)

    def test_distance_wraps(self):
        assert wave_number_distance(np.pi - 1e-9, -np.pi + 1e-9) < 1e-8
        assert wave_number_distance(0.1j, -0.1j) == pytest.approx(0.2)

    def test_candidates(self):
        energy, k_plus, k_minus, _ = CANONICAL_STATES["Q4"]
        kp_cands, km_cands = wave_numbers(CANONICAL, energy)
        assert min(wave_number_distance(k, k_plus) for k in kp_cands) < 1e-6
        assert min(wave_number_distance(k, k_minus) for k in km_cands) < 1e-6
        # K and -K
        assert wave_number_distance(kp_cands[0], -kp_cands[1]) < 1e-14


class TestEigenstate:
    def test_sheet_validation(self):
        with pytest.raises(ValidationError):
            Eigenstate(
                energy=0.3 - 0.001j,
                k_plus=2.2 + 0.002j,
                k_minus=-1.5 + 0.0015j,
                sheet=SheetId.II,
                residual=0.0,
                kind=StateKind.resonant,
            )

    def test_kind_validation(self):
        with pytest.raises(ValidationError):
            Eigenstate.model_validate(
                {**table_state("Q4").model_dump(), "kind": StateKind.antiresonant}
            )
        with pytest.raises(ValidationError):
            Eigenstate(
                energy=1.0,
                k_plus=1j,
                k_minus=-1j,
                sheet=SheetId.III,
                residual=0.0,
                kind=StateKind.bound,
            )

    def test_conjugate(self):
        state = table_state("Q4")
        partner = state.conjugate()
        assert partner.sheet is SheetId.II
        assert partner.kind is StateKind.antiresonant
        assert partner.energy == state.energy.conjugate()
        expected = CANONICAL_STATES["Q5"]
        assert abs(partner.energy - expected[0]) < 1e-12
        assert wave_number_distance(partner.k_plus, expected[1]) < 1e-12
        assert wave_number_distance(partner.k_minus, expected[2]) < 1e-12
        twice = partner.conjugate()
        assert twice.energy == state.energy
        assert wave_number_distance(twice.k_plus, state.k_plus) < 1e-14

    def test_decay_rate(self):
        assert table_state("Q4").decay_rate == pytest.approx(Q4_DECAY_RATE)


class TestClassify:
    @pytest.mark.parametrize("label", ["Q4", "R2", "S1", "Q2"])
    def test_table_energy(self, label):
        energy, _, _, sheet = CANONICAL_STATES[label]
        state = classify_root(CANONICAL, energy)
        assert state.sheet is SheetId(sheet)
        assert state.provenance == "classified"

    def test_spurious(self):
        with pytest.raises(SpuriousRootError) as err:
            classify_root(CANONICAL, 0.0)
        assert set(err.value.residuals) == {"I", "II", "III", "IV"}

    def test_on_cut(self):
        # real energy inside both bands: every wave number is real
        with pytest.raises(OnCutError) as err:
            classify_root(CANONICAL, 0.0, tol=10.0)
        assert abs(err.value.k_plus.imag) < 1e-14


class TestRefine:
    def test_refine_to_table(self):
        energy = CANONICAL_STATES["Q4"][0]
        state = classify_root(CANONICAL, energy + 1e-6)
        refined = newton_refine(CANONICAL, state)
        assert refined.provenance == "refined"
        assert refined.iterations > 0
        assert refined.residual < 1e-12
        assert abs(refined.energy - energy) < 1e-8
        assert abs(branch_residual(CANONICAL, refined.energy, refined.k_plus, refined.k_minus)) < 1e-12

    def test_max_iter(self):
        state = classify_root(CANONICAL, CANONICAL_STATES["Q4"][0] + 1e-6)
        with pytest.raises(ConvergenceError) as err:
            newton_refine(CANONICAL, state, max_iter=0)
        assert err.value.best == state
        assert err.value.residual > 1e-12

    def test_edge_degenerate_untouched(self):
        state = table_state("Q4").model_copy(update={"edge_degenerate": True})
        assert newton_refine(CANONICAL, state) is state

    def test_infinite_residual(self):
        state = table_state("Q4").model_copy(update={"residual": np.inf})
        with pytest.raises(ValueError):
            newton_refine(CANONICAL, state)


class TestSolveSpectrum:
    def test_count_and_labels(self, canonical_states):
        assert len(canonical_states) == 12
        assert [s.label for s in canonical_states] == CANONICAL_LABELS

        counts = {}
        for s in canonical_states:
            counts[s.sheet.value] = counts.get(s.sheet.value, 0) + 1
        assert counts == SHEET_COUNTS

    @pytest.mark.parametrize("label", CANONICAL_LABELS)
    def test_table_values(self, canonical_states, label):
        energy, k_plus, k_minus, sheet = CANONICAL_STATES[label]
        state = find_state(canonical_states, label)
        assert state.sheet is SheetId(sheet)
        assert abs(state.energy - energy) < 1e-7
        assert wave_number_distance(state.k_plus, k_plus) < 1e-6
        assert wave_number_distance(state.k_minus, k_minus) < 1e-6
        assert state.residual < 1e-7

    def test_kinds(self, canonical_states):
        kinds = {s.label: s.kind for s in canonical_states}
        assert kinds["P1"] is StateKind.bound
        assert kinds["P2"] is StateKind.bound
        assert kinds["Q1"] is StateKind.real_embedded
        assert kinds["R1"] is StateKind.real_embedded
        assert kinds["Q4"] is StateKind.resonant
        assert kinds["Q5"] is StateKind.antiresonant
        assert abs(find_state(canonical_states, "P1").energy.imag) < 1e-12

    def test_conjugate_closure(self, canonical_states):
        for state in canonical_states:
            partner = state.conjugate()
            assert any(
                s.sheet is partner.sheet and abs(s.energy - partner.energy) < 1e-10
                for s in canonical_states
            ), state.label

    def test_near_degenerate_states_distinct(self, canonical_states):
        p2 = find_state(canonical_states, "P2")
        r1 = find_state(canonical_states, "R1")
        assert 0 < abs(p2.energy - r1.energy) < 1e-7
        q2 = find_state(canonical_states, "Q2")
        q3 = find_state(canonical_states, "Q3")
        assert q2.energy.imag < 0 < q3.energy.imag

    def test_quasi_bound_locations(self, canonical_states):
        edges = CANONICAL.band_edges
        q2 = find_state(canonical_states, "Q2")
        # inside the + continuum, just below the - band
        assert edges.contains(Channel.plus, q2.energy.real)
        assert q2.energy.real < edges.upper_band[0]
        r2 = find_state(canonical_states, "R2")
        # inside the - continuum, just above the + band
        assert edges.contains(Channel.minus, r2.energy.real)
        assert r2.energy.real > edges.lower_band[1]

    def test_labels_independent_of_order(self, canonical_states):
        shuffled = [s.model_copy(update={"label": None}) for s in reversed(canonical_states)]
        assert [s.label for s in assign_labels(shuffled)] == CANONICAL_LABELS

    def test_find_state(self, canonical_states):
        assert find_state(canonical_states, "S2").sheet is SheetId.IV
        with pytest.raises(KeyError, match="valid labels"):
            find_state(canonical_states, "T1")

    def test_frame(self, canonical_states):
        frame = spectrum_frame(canonical_states)
        assert list(frame.columns) == [
            "label",
            "re_e",
            "im_e",
            "re_k_plus",
            "im_k_plus",
            "re_k_minus",
            "im_k_minus",
            "sheet",
            "kind",
            "residual",
        ]
        assert len(frame) == 12
        assert frame["im_e"].sum() == pytest.approx(0.0, abs=1e-12)

    def test_uncoupled(self):
        with pytest.raises(ValueError):
            solve_spectrum(CANONICAL.replace(g=0.0))

    def test_reflection(self, canonical_states):
        reflected = solve_spectrum(CANONICAL.reflected())
        energies = np.array([s.energy for s in reflected])
        for state in canonical_states:
            assert min(abs(energies + state.energy)) < 1e-9

    @pytest.mark.parametrize(
        "params",
        [
            ModelParams(tp_h=0.345, g=0.2, e_d=0.3),
            ModelParams(tp_h=0.3, g=0.1, e_d=-0.2),
            ModelParams(tp_h=0.5, g=0.15, e_d=0.1),
        ],
    )
    def test_other_parameters(self, params):
        states = solve_spectrum(params)
        assert len(states) == 12
        assert sum(s.kind is StateKind.bound for s in states) == 2
        for s in states:
            assert s.residual < 1e-7
            assert abs(branch_residual(params, s.energy, s.k_plus, s.k_minus)) < 1e-7


class TestOneChannel:
    def test_minus_channel(self):
        states = solve_one_channel(CANONICAL, "-")
        # one state below and one above the band
        assert len(states) == 2
        energy, k = ONE_CHANNEL_MINUS
        below = states[0]
        assert below.energy == pytest.approx(energy, abs=1e-7)
        assert abs(below.k - k) < 1e-7
        assert below.residual < 1e-8
        assert states[1].energy > 1.345

    def test_plus_channel(self):
        states = solve_one_channel(CANONICAL, "+")
        assert len(states) == 2
        assert states[0].energy < -1.345
        assert 0.655 < states[1].energy
        assert all(s.k.imag > 0 for s in states)

    def test_approaches_two_channel_state(self, canonical_states):
        # the weakly coupled + channel barely shifts Q2
        below = solve_one_channel(CANONICAL, "-")[0]
        q2 = find_state(canonical_states, "Q2")
        assert abs(q2.energy.real - below.energy) < 2e-7
        assert abs(abs(q2.k_minus) - abs(below.k)) < 2e-7

    def test_uncoupled(self):
        with pytest.raises(ValueError):
            solve_one_channel(CANONICAL.replace(g=0.0), "+")


def weak_coupling_cluster(params: ModelParams) -> dict[SheetId, float]:
    """``E_d + (g^2/2)(+-1/s+ +- 1/s-)`` for a dot level outside both bands"""
    s = {
        c: np.sqrt((params.e_d + c.sign * params.tp_h) ** 2 - params.t_h**2) for c in CHANNELS
    }
    sign = np.sign(params.e_d)
    return {
        sheet: params.e_d
        + sign * 0.5 * params.g**2 * sum(sheet.sign(c) / s[c] for c in CHANNELS)
        for sheet in SheetId
    }


class TestDotOutsideBands:
    params = ModelParams(tp_h=0.345, g=0.05, e_d=1.9)

    @pytest.mark.parametrize("e_d", [1.7, 1.8, 1.9, 2.0, -1.9])
    def test_twelve_states(self, e_d):
        params = self.params.replace(e_d=e_d)
        states = solve_spectrum(params)
        assert len(states) == 12
        assert_at_rounding_floor(params, states)

    def test_cluster_is_real(self):
        states = solve_spectrum(self.params)
        cluster = [s for s in states if abs(s.energy - self.params.e_d) < 0.01]
        assert len(cluster) == 4
        assert {s.sheet for s in cluster} == set(SheetId)
        expected = weak_coupling_cluster(self.params)
        for s in cluster:
            assert abs(s.energy.imag) < 1e-12
            assert s.energy.real == pytest.approx(expected[s.sheet], abs=1e-5)
        by_sheet = {s.sheet: s.energy.real for s in cluster}
        assert by_sheet[SheetId.I] == pytest.approx(1.90167, abs=1e-5)
        assert by_sheet[SheetId.II] == pytest.approx(1.90043, abs=1e-5)
        assert by_sheet[SheetId.III] == pytest.approx(1.89957, abs=1e-5)
        assert by_sheet[SheetId.IV] == pytest.approx(1.89833, abs=1e-5)
        assert [s.kind for s in cluster if s.sheet is SheetId.I] == [StateKind.bound]

    def test_below_both_bands(self):
        params = self.params.replace(e_d=-1.9)
        states = solve_spectrum(params)
        cluster = sorted(
            (s for s in states if abs(s.energy - params.e_d) < 0.01), key=lambda s: s.energy.real
        )
        expected = weak_coupling_cluster(params)
        assert len(cluster) == 4
        for s in cluster:
            assert s.energy.real == pytest.approx(expected[s.sheet], abs=1e-5)
        assert cluster[0].sheet is SheetId.I

    def test_random_draw(self):
        params = ModelParams(tp_h=0.457, g=0.036, e_d=1.908)
        assert len(solve_spectrum(params)) == 12

    def test_cluster_roots_fit_no_sheet(self):
        # the clustered polynomial roots are too inaccurate for classification,
        # refining on the sheets still recovers the states
        z0 = complex(1.9, 0.00148)
        with pytest.raises(SpuriousRootError):
            classify_root(self.params, z0)
        states = solve_spectrum(self.params)
        assert not any(abs(s.energy.imag) > 1e-12 for s in states if abs(s.energy - 1.9) < 0.01)

    def test_dot_seeds(self):
        seeds = dot_seeds(self.params)
        assert len(seeds) == 4
        expected = weak_coupling_cluster(self.params)
        assert {s.sheet for s in seeds} == set(SheetId)
        for seed in seeds:
            assert seed.energy.real == pytest.approx(expected[seed.sheet], abs=1e-12)
            refined = newton_refine(self.params, seed)
            assert refined.sheet is seed.sheet
            assert abs(refined.energy - seed.energy) < 1e-5

    def test_dot_seeds_inside_band(self):
        # an open channel gives complex estimates with a conjugate partner
        seeds = dot_seeds(CANONICAL)
        assert len(seeds) == 4
        imag = sorted(s.energy.imag for s in seeds)
        assert imag[0] < 0 < imag[-1]
        assert imag[0] == pytest.approx(-imag[-1])


def lattice_tolerance(params: ModelParams, state: Eigenstate) -> float:
    """
    Attainable residual of the lattice equation: the dot row carries the
    eigenvalue residual, and next to a band edge the wave number is resolved
    only to ``eps / |sin K|``.
    """
    s = min(abs(branch_amplitude(params, state.energy, c, state.k(c))) for c in CHANNELS)
    return max(1e-10, 2.0 * state.residual, 10.0 * EPS / s)


@pytest.fixture(
    scope="module",
    params=random_params(100, seed=2024),
    ids=lambda p: f"tp={p.tp_h:.3f},g={p.g:.3f},ed={p.e_d:.3f}",
)
def drawn(request):
    return request.param, solve_spectrum(request.param)


class TestParameterBattery:
    def test_count(self, drawn):
        params, states = drawn
        assert len(states) == 12
        assert sum(s.kind is StateKind.bound for s in states) >= 1
        assert all(s.sheet.value in SHEET_COUNTS for s in states)

    def test_dispersion_relation(self, drawn):
        params, states = drawn
        for s in states:
            for channel in CHANNELS:
                k = s.k(channel)
                lhs = s.energy + params.t_h * np.cos(k) + channel.sign * params.tp_h
                assert abs(lhs) < 1e-10, (s.name, channel)

    def test_residual_at_rounding_floor(self, drawn):
        assert_at_rounding_floor(*drawn)

    def test_conjugate_closure(self, drawn):
        params, states = drawn
        for s in states:
            assert any(
                o.sheet is s.sheet and abs(o.energy - s.energy.conjugate()) < 1e-9 for o in states
            ), s.name

    def test_reflection(self, drawn):
        params, states = drawn
        reflected = np.array([s.energy for s in solve_spectrum(params.reflected())])
        for s in states:
            if not s.edge_degenerate:
                assert min(abs(reflected + s.energy)) < 1e-8, s.name

    def test_lattice_equation(self, drawn):
        params, states = drawn
        for s in states:
            if s.edge_degenerate:
                continue
            profile = build_profile(params, s, (-100, 100))
            assert verify_schroedinger(params, profile) < lattice_tolerance(params, s), s.name
