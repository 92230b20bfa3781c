use napx::{gen_yule, generate, write_instance, AttributeLaw, Format, GenSpec, LengthLaw, Topology};
use proptest::prelude::*;

#[test]
fn yule_height_is_logarithmic_on_average() {
    let n = 50;
    let mean = (0..100u64).map(|s| gen_yule(&GenSpec::new(Topology::Yule, n, s)).unwrap().tree().height() as f64).sum::<f64>() / 100.0;
    assert!(mean <= 4.0 * (n as f64).log2(), "{mean}");
}

#[test]
fn same_spec_same_bytes() {
    for topology in [Topology::Yule, Topology::Caterpillar] {
        let spec = GenSpec::new(topology, 25, 99);
        let a = write_instance(&generate(&spec).unwrap(), Format::Json);
        let b = write_instance(&generate(&spec).unwrap(), Format::Json);
        assert_eq!(a, b);
    }
}

#[test]
fn constant_lengths() {
    let inst = generate(&GenSpec::new(Topology::Yule, 6, 1).with_lengths(LengthLaw::Constant(0.5))).unwrap();
    // 10 non-root edges
    assert!((inst.tree().total_pd() - 5.0).abs() < 1e-12);
}

proptest! {
    #[test]
    fn generated_instances_are_valid(seed in any::<u64>(), n in 2usize..60, caterpillar in any::<bool>(), lo in 0.0f64..0.5) {
        let topology = if caterpillar { Topology::Caterpillar } else { Topology::Yule };
        let law = AttributeLaw { a_range: (0.0, lo), b_range: (lo, 1.0), cost_range: (1, 4) };
        let inst = generate(&GenSpec::new(topology, n, seed).with_attributes(law)).unwrap();
        prop_assert_eq!(inst.num_taxa(), n);
        prop_assert!(inst.tree().is_binary());
        for t in inst.taxa() {
            prop_assert!(t.a <= t.b);
            prop_assert!(t.a <= lo && t.b >= lo);
        }
        for node in inst.tree().nodes().iter().skip(1) {
            prop_assert!(node.length > 0.0 && node.length <= 1.0);
        }
        if caterpillar {
            prop_assert_eq!(inst.tree().height() as usize, n);
        }
    }
}
