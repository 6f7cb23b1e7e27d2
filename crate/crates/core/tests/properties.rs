use std::collections::HashSet;

use proptest::prelude::*;

use sparse_asm::serial::{accumulate_columns, build_rank, compress_columns, count_rows};
use sparse_asm::{
    assemble_oracle, assemble_serial, csc_validate, prune_explicit_zeros, AssemblyRequest, ParallelAssembler,
    TripletList,
};

fn value() -> impl Strategy<Value = f64> {
    prop_oneof![
        4 => (-20i32..20).prop_map(f64::from),
        3 => -1e6f64..1e6,
        1 => Just(0.0),
        1 => Just(-0.0),
        1 => Just(f64::NAN),
        1 => Just(-f64::NAN),
    ]
}

prop_compose! {
    fn triplets()(m in 1u32..25, n in 1u32..25, len in 0usize..300)
        (entries in prop::collection::vec((1..=m, 1..=n, value()), len)) -> TripletList {
        entries.into_iter().collect()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn serial_matches_oracle(t in triplets()) {
        let req = AssemblyRequest::new(t);
        let (a, b) = (assemble_serial(&req), assemble_oracle(&req));
        prop_assert!(a.first_difference(&b).is_none(), "{:?}", a.first_difference(&b));
        prop_assert!(csc_validate(&a).is_empty());
    }

    #[test]
    fn parallel_matches_serial(t in triplets(), p in 1usize..7) {
        let req = AssemblyRequest::new(t);
        let serial = assemble_serial(&req);
        let par = ParallelAssembler::new(p).unwrap().serial_threshold(0).assemble(&req);
        prop_assert!(serial.first_difference(&par).is_none(), "{:?}", serial.first_difference(&par));
    }

    #[test]
    fn rank_is_stable_row_sort(t in triplets()) {
        let mut rc = count_rows(&t, t.extent());
        let rank = build_rank(&t, &mut rc);
        prop_assert!(rank.is_stable_row_sort(t.rows()));
    }

    #[test]
    fn parallel_plan_composes_to_serial_irank(t in triplets(), p in 1usize..7) {
        let req = AssemblyRequest::new(t.clone());
        let dims = req.dims();
        let mut rc = count_rows(&t, dims);
        let rank = build_rank(&t, &mut rc);
        let serial = accumulate_columns(compress_columns(&t, rc, rank, dims), &t);

        let plan = ParallelAssembler::new(p).unwrap().plan(&req);
        prop_assert_eq!(plan.rank.as_slice().len(), t.len());
        prop_assert_eq!(&plan.col_ptr, &serial.col_ptr);
        prop_assert_eq!(plan.inverse_rank(), serial.irank);
    }

    // each output slot is written by exactly one worker during the scatter
    #[test]
    fn scatter_slots_have_one_owner(t in triplets(), p in 1usize..7) {
        let req = AssemblyRequest::new(t);
        let plan = ParallelAssembler::new(p).unwrap().plan(&req);
        let mut owner = vec![usize::MAX; plan.nnz()];
        let mut covered = 0;
        for k in 0..p {
            let span = plan.worker_span(k);
            covered += span.len();
            for &slot in &plan.irank_p[span] {
                let o = &mut owner[slot as usize];
                prop_assert!(*o == usize::MAX || *o == k, "slot {} shared by {} and {}", slot, o, k);
                *o = k;
            }
        }
        prop_assert_eq!(covered, plan.irank_p.len());
        prop_assert!(owner.iter().all(|&o| o != usize::MAX));
    }

    #[test]
    fn nnz_is_distinct_pair_count(t in triplets()) {
        let distinct: HashSet<_> = t.rows().iter().zip(t.cols()).collect();
        let m = assemble_serial(&AssemblyRequest::new(t.clone()));
        prop_assert_eq!(m.nnz(), distinct.len());
    }

    #[test]
    fn reassembling_output_is_identity(t in triplets()) {
        let req = AssemblyRequest::new(t);
        let m = assemble_serial(&req);
        let again = AssemblyRequest::new(m.to_triplets()).with_dims(m.dims()).unwrap();
        let m2 = assemble_serial(&again);
        prop_assert!(m.first_difference(&m2).is_none());
    }

    #[test]
    fn pruning_keeps_structure(t in triplets()) {
        let m = prune_explicit_zeros(&assemble_serial(&AssemblyRequest::new(t)));
        prop_assert!(csc_validate(&m).is_empty());
        prop_assert!(m.values().iter().all(|&v| v != 0.0));
    }

    #[test]
    fn permuting_duplicates_of_integers_keeps_values(t in triplets(), seed in any::<u64>()) {
        // integer sums are exact, so any input order gives the same matrix
        let ints: TripletList = t.iter().map(|(i, j, v)| (i, j, if v.is_finite() { v.trunc() % 100.0 } else { 1.0 })).collect();
        let mut entries: Vec<_> = ints.iter().collect();
        let n = entries.len();
        let mut state = seed | 1;
        for k in (1..n).rev() {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            entries.swap(k, (state % (k as u64 + 1)) as usize);
        }
        let shuffled: TripletList = entries.into_iter().collect();
        let a = assemble_serial(&AssemblyRequest::new(ints));
        let b = assemble_serial(&AssemblyRequest::new(shuffled));
        prop_assert_eq!(a.col_ptr(), b.col_ptr());
        prop_assert_eq!(a.row_idx(), b.row_idx());
        let same = a.values().iter().zip(b.values()).all(|(x, y)| x == y || (x == &0.0 && y == &0.0));
        prop_assert!(same);
    }
}
