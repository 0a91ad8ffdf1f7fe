use bianchi_core::congruence::SubgroupSpec;
use bianchi_core::presentation::load_presentation;
use bianchi_core::quadfield::{parse_ring_element, FieldDescriptor, IdealRep};
use bianchi_core::schreier::{subgroup_presentation, SimplifyOptions};

fn main() {
    for (d, lvl) in [(1u64, "2+1*w"), (1, "3"), (1, "3+2*w")] {
        let field = FieldDescriptor::new(d).unwrap();
        let parent = load_presentation(d).unwrap();
        let ideal = IdealRep::principal(parse_ring_element(lvl).unwrap(), &field).unwrap();
        let spec = SubgroupSpec::principal(ideal, &field).unwrap();
        let t0 = std::time::Instant::now();
        let sub = subgroup_presentation(&parent, &spec, SimplifyOptions::default()).unwrap();
        println!("D={d} level {lvl}: {:?} in {:.2?}", sub.stats, t0.elapsed());
    }
}
