use graphnet_core::synth::{class_labels, generate, generate_sample, morphology, raw_sample, sample_normal_variance, SynthConfig, MORPHOLOGY};

fn cfg(num_samples: usize, amplitude: f64) -> SynthConfig {
    SynthConfig { num_samples, lobulation_amplitude: amplitude, target_nodes: 256, ..Default::default() }
}

#[test]
fn morphology_follows_its_scaling_law() {
    let c = cfg(4, 0.25);
    for (index, label) in [(0, 0), (1, 1)] {
        let (mesh, labels, _) = raw_sample(&c, index, label);
        let base = morphology(&mesh, &labels);
        for s in [0.5, 2.0, 3.7] {
            let scaled = morphology(&mesh.scaled(s), &labels);
            for (k, (name, power)) in MORPHOLOGY.iter().enumerate() {
                let want = base[k] * s.powi(*power);
                // Absolute floor for features that vanish up to rounding.
                let tol = 1e-9 * want.abs() + 1e-10 * s.powi(*power);
                assert!((scaled[k] - want).abs() <= tol, "{name}: {} vs {want}", scaled[k]);
            }
        }
    }
}

#[test]
fn lobulated_bumps_are_rougher() {
    for amplitude in [0.15, 0.25] {
        let c = cfg(100, amplitude);
        let data = generate(&c).unwrap();
        let mean = |label: usize| {
            let v: Vec<f64> = data.iter().filter(|s| s.graph_label == label).map(sample_normal_variance).collect();
            v.iter().sum::<f64>() / v.len() as f64
        };
        let (smooth, lobed) = (mean(0), mean(1));
        assert!(lobed > smooth, "amplitude {amplitude}: {lobed} <= {smooth}");
    }
}

#[test]
fn samples_depend_only_on_seed_and_index() {
    let c = cfg(6, 0.25);
    let all = generate(&c).unwrap();
    let labels = class_labels(&c);
    for i in [0, 3, 5] {
        assert_eq!(generate_sample(&c, i, labels[i]).unwrap(), all[i]);
    }
    let other = generate(&SynthConfig { seed: 1, ..c.clone() }).unwrap();
    assert_ne!(other, all);
    let longer = generate(&SynthConfig { num_samples: 8, ..c }).unwrap();
    // Class allocation is reshuffled, but a sample with the same label is unchanged.
    for i in 0..6 {
        if longer[i].graph_label == all[i].graph_label {
            assert_eq!(longer[i], all[i]);
        }
    }
}
