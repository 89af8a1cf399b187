use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use treedg::dg::{DgSolver, IndicatorParams, StateArray, VolumeIntegral};
use treedg::equations::{builtin_initial_condition, EquationSet, InitialCondition, NumericalFlux};
use treedg::mesh::TreeMesh;
use treedg::semi::Semidiscretization;
use treedg::Error;

fn euler2d() -> EquationSet {
    EquationSet::compressible_euler_2d(1.4).unwrap()
}

fn shock_capturing() -> VolumeIntegral {
    VolumeIntegral::ShockCapturing {
        volume_flux: NumericalFlux::EntropyConservative,
        fv_flux: NumericalFlux::LaxFriedrichs,
        indicator: IndicatorParams::default(),
    }
}

fn all_volume_integrals() -> Vec<VolumeIntegral> {
    vec![
        VolumeIntegral::WeakForm,
        VolumeIntegral::FluxDifferencing {
            volume_flux: NumericalFlux::EntropyConservative,
        },
        shock_capturing(),
    ]
}

/// Periodic `[-1,1]²` mesh at `level` with a refined patch (mortars present).
fn refined_mesh(level: usize) -> TreeMesh {
    let mut mesh = TreeMesh::new(&[-1.0, -1.0], &[1.0, 1.0], level, 100_000, &[true, true]).unwrap();
    let target = mesh.find_leaf(&[0.1, 0.2]).unwrap();
    mesh.refine_cells(&[target]).unwrap();
    let target = mesh.find_leaf(&[0.1, 0.2]).unwrap();
    mesh.refine_cells(&[target]).unwrap();
    mesh
}

fn semi_with(
    mesh: TreeMesh,
    ic: &str,
    polydeg: usize,
    surface: NumericalFlux,
    vi: VolumeIntegral,
) -> Semidiscretization {
    let eq = euler2d();
    let (ic, source) = builtin_initial_condition(ic, &eq).unwrap();
    let solver = DgSolver::new(polydeg, surface, vi).unwrap();
    Semidiscretization::new(mesh, eq, ic, solver).unwrap().with_source(source)
}

#[test]
fn free_stream_on_adapted_mesh_for_every_configuration() {
    for vi in all_volume_integrals() {
        for surface in NumericalFlux::ALL {
            let semi = semi_with(refined_mesh(2), "constant", 3, surface, vi);
            assert!(!semi.interfaces().mortars.is_empty());
            let u = semi.semidiscretize((0.0, 1.0)).unwrap().u0;
            let du = semi.rhs(&u, 0.0).unwrap();
            assert!(
                du.max_abs() <= 1e-13 * u.max_abs(),
                "{} / {}: {}",
                vi.name(),
                surface.name(),
                du.max_abs()
            );
        }
    }
}

#[test]
fn advection_derivative_of_sine() {
    let eq = EquationSet::linear_advection_1d(1.0).unwrap();
    let ic = InitialCondition::new("sine", false, |x, _| [(std::f64::consts::PI * x[0]).sin(), 0.0, 0.0, 0.0]);
    let mesh = TreeMesh::new(&[-1.0], &[1.0], 3, 100, &[true]).unwrap();
    let solver = DgSolver::new(7, NumericalFlux::LaxFriedrichs, VolumeIntegral::WeakForm).unwrap();
    let semi = Semidiscretization::new(mesh, eq, ic, solver).unwrap();
    let u = semi.semidiscretize((0.0, 1.0)).unwrap().u0;
    let du = semi.rhs(&u, 0.0).unwrap();
    for e in 0..semi.n_elements() {
        for (node, x) in semi.node_coordinates(e).iter().enumerate() {
            let exact = -std::f64::consts::PI * (std::f64::consts::PI * x[0]).cos();
            assert!((du.node(e, node)[0] - exact).abs() < 1e-6, "{} {}", x[0], du.node(e, node)[0] - exact);
        }
    }
    // Time only enters through the source.
    let du2 = semi.rhs(&u, 0.37).unwrap();
    assert_eq!(du, du2);
}

fn random_density_wave(semi: &Semidiscretization, rng: &mut ChaCha8Rng) -> StateArray {
    let mut u = semi.semidiscretize((0.0, 1.0)).unwrap().u0;
    for x in u.as_mut_slice().iter_mut() {
        *x *= 1.0 + 0.05 * rng.gen_range(-1.0..1.0);
    }
    u
}

#[test]
fn global_conservation_with_mortars() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for vi in all_volume_integrals() {
        for surface in [NumericalFlux::LaxFriedrichs, NumericalFlux::Hll, NumericalFlux::EntropyConservative] {
            let semi = semi_with(refined_mesh(2), "density_wave", 3, surface, vi);
            let u = random_density_wave(&semi, &mut rng);
            let du = semi.rhs(&u, 0.0).unwrap();
            let rates = semi.conserved_totals(&du).unwrap();
            let scale = semi.conserved_totals(&u).unwrap();
            for (r, s) in rates.iter().zip(&scale) {
                assert!(r.abs() <= 1e-13 * s.abs().max(1.0), "{}: {r}", vi.name());
            }
        }
    }
}

#[test]
fn semidiscrete_entropy_balance() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let ec = VolumeIntegral::FluxDifferencing {
        volume_flux: NumericalFlux::EntropyConservative,
    };
    // L2 mortars do not carry the entropy balance over, so the meshes are conforming.
    for level in [1, 2] {
        let mesh = TreeMesh::new(&[-1.0, -1.0], &[1.0, 1.0], level, 1000, &[true, true]).unwrap();
        let semi = semi_with(mesh.clone(), "density_wave", 3, NumericalFlux::EntropyConservative, ec);
        let u = random_density_wave(&semi, &mut rng);
        let du = semi.rhs(&u, 0.0).unwrap();
        let scale = semi.total_entropy(&u).unwrap().abs().max(1.0);
        let production = semi.entropy_production(&u, &du).unwrap();
        assert!(production.abs() <= 1e-12 * scale, "EC production {production} mortars {}", semi.interfaces().mortars.len());

        let semi = semi_with(mesh, "density_wave", 3, NumericalFlux::LaxFriedrichs, ec);
        let du = semi.rhs(&u, 0.0).unwrap();
        let production = semi.entropy_production(&u, &du).unwrap();
        assert!(production <= 1e-12 * scale, "LLF production {production}");
    }
}

#[test]
fn weak_form_equals_central_flux_differencing_with_mortars() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let weak = semi_with(refined_mesh(1), "density_wave", 3, NumericalFlux::Hll, VolumeIntegral::WeakForm);
    let central = semi_with(
        refined_mesh(1),
        "density_wave",
        3,
        NumericalFlux::Hll,
        VolumeIntegral::FluxDifferencing {
            volume_flux: NumericalFlux::Central,
        },
    );
    let eq = euler2d();
    for _ in 0..20 {
        let mut u = weak.zero_state();
        for e in 0..u.n_elements() {
            for node in 0..u.nodes_per_element() {
                let prim = [rng.gen_range(0.5..2.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(0.5..2.0)];
                u.set_node(e, node, &eq.prim2cons(&prim).unwrap());
            }
        }
        let a = weak.rhs(&u, 0.0).unwrap();
        let b = central.rhs(&u, 0.0).unwrap();
        let diff = a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        assert!(diff <= 1e-12 * a.max_abs());
    }
}

#[test]
fn integrate_quantity_examples() {
    let semi = semi_with(refined_mesh(2), "constant", 3, NumericalFlux::LaxFriedrichs, VolumeIntegral::WeakForm);
    let u = semi.semidiscretize((0.0, 0.0)).unwrap().u0;
    let measure = semi.integrate_quantity(&u, |_| Ok(1.0)).unwrap();
    assert!((measure - 4.0).abs() < 1e-14);
    let mass = semi.integrate_quantity(&u, |_| Ok(2.0)).unwrap();
    assert!((mass - 8.0).abs() < 1e-13);

    let eq = euler2d();
    let ic = InitialCondition::new("unit", false, |_, _| [1.0, 0.0, 0.0, 2.5, ]);
    let mesh = TreeMesh::new(&[-1.0, -1.0], &[1.0, 1.0], 2, 1000, &[true, true]).unwrap();
    let solver = DgSolver::new(2, NumericalFlux::LaxFriedrichs, VolumeIntegral::WeakForm).unwrap();
    let semi = Semidiscretization::new(mesh, eq, ic, solver).unwrap();
    let u = semi.semidiscretize((0.0, 0.0)).unwrap().u0;
    assert!(semi.total_entropy(&u).unwrap().abs() < 1e-14);
}

#[test]
fn error_norms() {
    let semi = semi_with(refined_mesh(2), "density_wave", 3, NumericalFlux::LaxFriedrichs, VolumeIntegral::WeakForm);
    let ic = semi.initial_condition().clone();
    let mut u = semi.semidiscretize((0.0, 1.0)).unwrap().u0;
    let exact = semi.compute_errors(&u, 0.0, &ic).unwrap();
    assert!(exact.l2.iter().chain(&exact.linf).all(|&e| e < 1e-15));
    u.as_mut_slice().iter_mut().for_each(|x| *x += 1e-3);
    let off = semi.compute_errors(&u, 0.0, &ic).unwrap();
    for (l2, linf) in off.l2.iter().zip(&off.linf) {
        assert!((l2 - 1e-3).abs() < 1e-12);
        assert!((linf - 1e-3).abs() < 1e-12);
    }
}

#[test]
fn stable_dt_examples() {
    let eq = EquationSet::linear_advection_1d(1.0).unwrap();
    let (ic, _) = builtin_initial_condition("convergence_test", &eq).unwrap();
    let mesh = TreeMesh::new(&[-1.0], &[1.0], 2, 100, &[true]).unwrap();
    let solver = DgSolver::new(3, NumericalFlux::LaxFriedrichs, VolumeIntegral::WeakForm).unwrap();
    let semi = Semidiscretization::new(mesh, eq.clone(), ic.clone(), solver.clone()).unwrap();
    let u = semi.semidiscretize((0.0, 1.0)).unwrap().u0;
    let dt = semi.compute_stable_dt(&u, 0.5).unwrap();
    assert!((dt - 0.5 * 0.5 / 7.0).abs() < 1e-15);
    assert_eq!(semi.compute_stable_dt(&u, 1.0).unwrap(), 2.0 * dt);
    assert!(matches!(semi.compute_stable_dt(&u, 1.5), Err(Error::Config(_))));

    let fine = TreeMesh::new(&[-1.0], &[1.0], 3, 100, &[true]).unwrap();
    let semi = Semidiscretization::new(fine, eq, ic, solver).unwrap();
    let u = semi.semidiscretize((0.0, 1.0)).unwrap().u0;
    assert!((semi.compute_stable_dt(&u, 0.5).unwrap() - 0.5 * dt).abs() < 1e-15);

    // A zero advection speed falls back to cfl·Δx.
    let eq = EquationSet::linear_advection_1d(0.0).unwrap();
    let ic = InitialCondition::new("zero", true, |_, _| [0.0; 4]);
    let mesh = TreeMesh::new(&[-1.0], &[1.0], 2, 100, &[true]).unwrap();
    let solver = DgSolver::new(3, NumericalFlux::LaxFriedrichs, VolumeIntegral::WeakForm).unwrap();
    let semi = Semidiscretization::new(mesh, eq, ic, solver).unwrap();
    let u = semi.semidiscretize((0.0, 1.0)).unwrap().u0;
    assert_eq!(semi.compute_stable_dt(&u, 0.5).unwrap(), 0.25);
}

#[test]
fn construction_checks_and_independence() {
    let eq1 = EquationSet::compressible_euler_1d(1.4).unwrap();
    let (ic, _) = builtin_initial_condition("constant", &eq1).unwrap();
    let mesh = TreeMesh::new(&[-1.0, -1.0], &[1.0, 1.0], 1, 100, &[true, true]).unwrap();
    let solver = DgSolver::new(3, NumericalFlux::LaxFriedrichs, VolumeIntegral::WeakForm).unwrap();
    assert!(matches!(
        Semidiscretization::new(mesh.clone(), eq1, ic, solver.clone()),
        Err(Error::Config(_))
    ));

    let eq = EquationSet::linear_advection_2d([1.0, 0.5]).unwrap();
    let (ic, _) = builtin_initial_condition("convergence_test", &eq).unwrap();
    let a = Semidiscretization::new(mesh.clone(), eq.clone(), ic.clone(), solver.clone()).unwrap();
    assert_eq!(a.nvars(), 1);
    assert_eq!(a.nodes_per_element(), 16);
    let eq_b = EquationSet::linear_advection_2d([-2.0, 0.0]).unwrap();
    let b = Semidiscretization::new(mesh, eq_b, ic, solver).unwrap();
    let u = a.semidiscretize((0.0, 1.0)).unwrap().u0;
    let da = a.rhs(&u, 0.0).unwrap();
    let db = b.rhs(&u, 0.0).unwrap();
    assert_ne!(da, db);
    assert_eq!(da, a.rhs(&u, 0.0).unwrap());

    // Inadmissible initial data is reported with its location.
    let eq = euler2d();
    let ic = InitialCondition::new("bad", false, |x, _| {
        let rho = if x[0] > 0.5 { -1.0 } else { 1.0 };
        [rho, 0.0, 0.0, 2.5]
    });
    let mesh = TreeMesh::new(&[-1.0, -1.0], &[1.0, 1.0], 1, 100, &[true, true]).unwrap();
    let solver = DgSolver::new(2, NumericalFlux::LaxFriedrichs, VolumeIntegral::WeakForm).unwrap();
    let semi = Semidiscretization::new(mesh, eq, ic, solver).unwrap();
    match semi.semidiscretize((0.0, 1.0)) {
        Err(Error::Admissibility { location: Some(loc), .. }) => assert!(loc.element < 4),
        other => panic!("expected admissibility error, got {other:?}"),
    }
}

#[test]
fn adaptation_conserves_and_keeps_free_stream() {
    let mut semi = semi_with(
        TreeMesh::new(&[-1.0, -1.0], &[1.0, 1.0], 2, 10_000, &[true, true]).unwrap(),
        "density_wave",
        3,
        NumericalFlux::LaxFriedrichs,
        shock_capturing(),
    );
    let u = semi.semidiscretize((0.0, 1.0)).unwrap().u0;
    let before = semi.conserved_totals(&u).unwrap();
    let leaves: Vec<usize> = semi.mesh().leaves()[..3].to_vec();
    let (u1, report) = semi.adapt(&u, &leaves, &[]).unwrap();
    assert_eq!(report.elements_after, 16 + 9);
    let after = semi.conserved_totals(&u1).unwrap();
    for (a, b) in before.iter().zip(&after) {
        assert!((a - b).abs() <= 1e-12 * a.abs());
    }
    // Coarsen back everything that can be coarsened.
    let parents = semi.mesh().coarsenable_parents();
    let (u2, _) = semi.adapt(&u1, &[], &parents).unwrap();
    let back = semi.conserved_totals(&u2).unwrap();
    for (a, b) in before.iter().zip(&back) {
        assert!((a - b).abs() <= 1e-12 * a.abs());
    }

    let mut semi = semi_with(refined_mesh(2), "constant", 3, NumericalFlux::Hll, shock_capturing());
    let u = semi.semidiscretize((0.0, 1.0)).unwrap().u0;
    let leaf = semi.mesh().leaves()[5];
    let (u, _) = semi.adapt(&u, &[leaf], &[]).unwrap();
    semi.interfaces().check_face_partition(semi.mesh()).unwrap();
    let du = semi.rhs(&u, 0.0).unwrap();
    assert!(du.max_abs() <= 1e-13 * u.max_abs());
}

#[test]
fn dirichlet_boundaries_preserve_exact_constant() {
    let eq = euler2d();
    let (ic, _) = builtin_initial_condition("constant", &eq).unwrap();
    let mesh = TreeMesh::new(&[-1.0, -1.0], &[1.0, 1.0], 2, 1000, &[false, true]).unwrap();
    let solver = DgSolver::new(3, NumericalFlux::Hll, VolumeIntegral::WeakForm).unwrap();
    let semi = Semidiscretization::new(mesh, eq, ic, solver).unwrap();
    assert_eq!(semi.interfaces().boundaries.len(), 8);
    let u = semi.semidiscretize((0.0, 1.0)).unwrap().u0;
    let du = semi.rhs(&u, 0.0).unwrap();
    assert!(du.max_abs() <= 1e-13 * u.max_abs());
}
