use proptest::prelude::*;

use sotkit::fusion::{backward_init_box, fuse, reverse_align, Choice, FusionMode, FusionPolicy, PassLabel};
use sotkit::tracklet::stability_score;
use sotkit::{iou, BBox, Tracklet};

fn arb_box() -> impl Strategy<Value = BBox> {
    (0.0..300.0f64, 0.0..300.0f64, 4.0..80.0f64, 4.0..80.0f64).prop_map(|(x, y, w, h)| BBox::new(x, y, w, h))
}

/// Two tracks of equal length, both with a box at frame 0.
fn arb_pair() -> impl Strategy<Value = (Tracklet, Tracklet)> {
    (2..40usize).prop_flat_map(|n| {
        let slot = || prop_oneof![8 => arb_box().prop_map(Some), 1 => Just(None)];
        (
            arb_box(),
            proptest::collection::vec(slot(), n - 1),
            arb_box(),
            proptest::collection::vec(slot(), n - 1),
        )
            .prop_map(|(f0, f, b0, b)| {
                let fwd: Vec<_> = std::iter::once(Some(f0)).chain(f).collect();
                let bwd: Vec<_> = std::iter::once(Some(b0)).chain(b).collect();
                (Tracklet::new("f", fwd), Tracklet::new("f", bwd))
            })
    })
}

fn policy(mode: FusionMode, agreement_iou: f64) -> FusionPolicy {
    FusionPolicy { mode, agreement_iou }
}

proptest! {
    #[test]
    fn sequence_select_takes_the_steadier_pass((fwd, bwd) in arb_pair()) {
        let out = fuse(&fwd, &bwd, &FusionPolicy::default()).unwrap();
        let (sf, sb) = (stability_score(&fwd).unwrap(), stability_score(&bwd).unwrap());
        let expect = if sb < sf { PassLabel::Backward } else { PassLabel::Forward };
        prop_assert_eq!(&out.chosen, &Choice::Sequence(expect));
        prop_assert_eq!(out.scores.forward, sf);
        prop_assert_eq!(out.scores.backward, sb);
        let src = if expect == PassLabel::Backward { &bwd } else { &fwd };
        prop_assert_eq!(out.track.boxes[0], fwd.boxes[0]);
        prop_assert_eq!(&out.track.boxes[1..], &src.boxes[1..]);
        prop_assert_eq!(out.scores.fused, stability_score(&out.track).unwrap());
    }

    #[test]
    fn per_frame_agreement_rules((fwd, bwd) in arb_pair(), thr in 0.0..1.0f64) {
        let out = fuse(&fwd, &bwd, &policy(FusionMode::PerFrameAgreement, thr)).unwrap();
        let Choice::PerFrame(labels) = &out.chosen else { panic!("expected per-frame labels") };
        prop_assert_eq!(labels.len(), fwd.len());
        prop_assert_eq!(labels[0], PassLabel::Forward);
        prop_assert_eq!(out.track.boxes[0], fwd.boxes[0]);
        let backward_wins = stability_score(&bwd).unwrap() < stability_score(&fwd).unwrap();
        for i in 1..fwd.len() {
            let got = out.track.boxes[i];
            match (fwd.boxes[i], bwd.boxes[i]) {
                (Some(f), Some(b)) => {
                    if iou(&f, &b).unwrap() >= thr || !backward_wins {
                        prop_assert_eq!(got, Some(f));
                    } else {
                        prop_assert_eq!(got, Some(b));
                    }
                }
                (f, None) => prop_assert_eq!(got, f),
                (None, b) => prop_assert_eq!(got, b),
            }
        }
    }

    #[test]
    fn fusing_a_pass_with_itself_is_identity((fwd, _) in arb_pair(), per_frame in any::<bool>()) {
        let mode = if per_frame { FusionMode::PerFrameAgreement } else { FusionMode::SequenceSelect };
        let out = fuse(&fwd, &fwd, &policy(mode, 0.5)).unwrap();
        prop_assert_eq!(&out.track.boxes, &fwd.boxes);
    }

    #[test]
    fn fusion_is_deterministic((fwd, bwd) in arb_pair(), thr in 0.0..1.0f64) {
        for mode in [FusionMode::SequenceSelect, FusionMode::PerFrameAgreement] {
            let p = policy(mode, thr);
            prop_assert_eq!(fuse(&fwd, &bwd, &p).unwrap(), fuse(&fwd, &bwd, &p).unwrap());
        }
    }

    #[test]
    fn reverse_align_is_an_involution((fwd, _) in arb_pair()) {
        let r = reverse_align(&fwd);
        prop_assert_eq!(r.boxes.first(), fwd.boxes.last());
        prop_assert_eq!(reverse_align(&r), fwd);
    }
}

#[test]
fn backward_init_falls_back_past_missing_tail() {
    let a = BBox::new(1.0, 1.0, 5.0, 5.0);
    let b = BBox::new(2.0, 2.0, 6.0, 6.0);
    let t = Tracklet::new("t", vec![Some(a), Some(b), None, None]);
    assert_eq!(backward_init_box(&t).unwrap(), b);
    assert!(backward_init_box(&Tracklet::new("e", vec![None, None])).is_err());
}

#[test]
fn mismatched_lengths_and_missing_first_frame_are_rejected() {
    let a = Some(BBox::new(0.0, 0.0, 4.0, 4.0));
    let p = FusionPolicy::default();
    assert!(fuse(&Tracklet::new("x", vec![a, a]), &Tracklet::new("x", vec![a]), &p).is_err());
    assert!(fuse(&Tracklet::new("x", vec![None, a]), &Tracklet::new("x", vec![a, a]), &p).is_err());
}

#[test]
fn tie_goes_to_forward() {
    let f: Vec<_> = (0..6).map(|i| Some(BBox::new(i as f64, 0.0, 10.0, 10.0))).collect();
    let b: Vec<_> = (0..6).map(|i| Some(BBox::new(0.0, i as f64, 20.0, 20.0))).collect();
    let out = fuse(&Tracklet::new("t", f.clone()), &Tracklet::new("t", b), &FusionPolicy::default()).unwrap();
    assert_eq!(out.chosen, Choice::Sequence(PassLabel::Forward));
    assert_eq!(out.track.boxes, f);
}

proptest! {
    #[test]
    fn zero_agreement_threshold_keeps_forward(n in 2..30usize, seed in 0.0..1.0f64) {
        let fwd: Vec<_> = (0..n).map(|i| Some(BBox::new(i as f64 * seed, 0.0, 10.0 + i as f64, 10.0))).collect();
        let bwd: Vec<_> = (0..n).map(|i| Some(BBox::new(i as f64 * 3.0, 5.0, 10.0, 10.0 + (i % 3) as f64))).collect();
        let out = fuse(&Tracklet::new("z", fwd.clone()), &Tracklet::new("z", bwd), &policy(FusionMode::PerFrameAgreement, 0.0)).unwrap();
        prop_assert_eq!(out.track.boxes, fwd);
    }
}
