//! Reads MOT-format ground truth and detections from strings, filters them and
//! writes tracker output back.

use spo_track::mot::{
    detections_by_frame, parse_boxes, parse_results, parse_seqinfo, to_trajectories, write_results, BoxKind, GtFilter,
};

const SEQINFO: &str =
    "[Sequence]\nname=DEMO-01\nimDir=img1\nframeRate=30\nseqLength=3\nimWidth=1920\nimHeight=1080\nimExt=.jpg\n";

const GT: &str = "\
1,1,100,200,50,120,1,1,1.0
2,1,104,200,50,120,1,1,0.8
3,1,108,201,50,120,1,1,0.6
1,2,900,300,40,90,0,7,1.0
2,3,600,500,30,80,1,1,0.4
";

const DET: &str = "\
1,-1,101,199,49,121,0.98,-1,-1,-1
2,-1,105,202,48,118,0.91,-1,-1,-1
3,-1,1500,50,20,40,0.40,-1,-1,-1
";

fn main() -> spo_track::Result<()> {
    let meta = parse_seqinfo(SEQINFO)?;
    println!("{}: {} frames at {} fps", meta.name, meta.frame_count, meta.frame_rate);

    let rows = parse_boxes(GT, BoxKind::GroundTruth)?;
    let kept: Vec<_> = rows.iter().copied().filter(|b| GtFilter::default().keeps(b)).collect();
    println!(
        "ground truth rows: {} parsed, {} pedestrians marked considered",
        rows.len(),
        kept.len()
    );
    let gt = to_trajectories(&kept, meta.frame_count);
    println!("trajectories: {}, boxes per frame {:?}", gt.len(), gt.cardinalities());

    let det = detections_by_frame(&parse_boxes(DET, BoxKind::Detection)?, meta.frame_count);
    println!(
        "detections per frame: {:?}",
        det.iter().map(Vec::len).collect::<Vec<_>>()
    );

    let text = write_results(&gt);
    print!("{text}");
    assert_eq!(parse_results(&text)?.rows(), gt.rows());
    Ok(())
}
