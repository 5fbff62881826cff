use image::{Rgb, RgbImage};
use nalgebra::Vector3;

use rgbd_annotate::bbox::{Box3D, BoxTrack, Quat, TrackId};
use rgbd_annotate::geometry::{CameraIntrinsics, CameraKind, CameraRig, DepthMap};
use rgbd_annotate::metrics::{evaluate_dataset, AnnotationSet};
use rgbd_annotate::project::{export_annotations, AnnotationProject, ExportFormat, FrameEntry};
use rgbd_annotate::segmentation::{
    apply_scribbles, crop_image, default_padding, grabcut_iterate, infer_rect, init_trimap, BinaryMask,
    GrabCutParams, InstanceMask, Modality, ScribbleLabel, ScribbleSet, Stroke,
};

const W: u32 = 96;
const H: u32 = 72;

/// A red cube of side 0.4 m at (0, 0, 2) seen by a pinhole camera, on a blue wall.
fn scene(root: &std::path::Path) -> (AnnotationProject, BinaryMask) {
    let intr = CameraIntrinsics::new(80.0, 80.0, 47.5, 35.5, W, H).unwrap();
    let (x0, x1) = (47.5 - 0.2 / 1.8 * 80.0, 47.5 + 0.2 / 1.8 * 80.0);
    let (y0, y1) = (35.5 - 0.2 / 1.8 * 80.0, 35.5 + 0.2 / 1.8 * 80.0);
    let inside = |x: u32, y: u32| (x as f64) > x0 && (x as f64) < x1 && (y as f64) > y0 && (y as f64) < y1;
    std::fs::create_dir_all(root.join("frames")).unwrap();
    let entry = FrameEntry { rgb: "frames/0.png".into(), depth: "frames/0_d.png".into() };
    RgbImage::from_fn(W, H, |x, y| if inside(x, y) { Rgb([200, 40, 40]) } else { Rgb([40, 40, 200]) })
        .save(root.join(&entry.rgb))
        .unwrap();
    DepthMap::filled(W as usize, H as usize, 3000).save_png(&root.join(&entry.depth)).unwrap();
    let truth = BinaryMask::from_fn(W as usize, H as usize, |r, c| inside(c as u32, r as u32));
    (AnnotationProject::new(root, vec![entry], CameraRig::coincident(intr)), truth)
}

#[test]
fn box_to_mask_to_saved_project_to_evaluation() {
    let dir = tempfile::tempdir().unwrap();
    let (mut project, truth) = scene(dir.path());
    let cube = Box3D::new(TrackId(1), "cube", 0, Vector3::new(0.0, 0.0, 2.0), Vector3::new(0.4, 0.4, 0.4), Quat::IDENTITY);
    project.tracks.insert(TrackId(1), BoxTrack::from_keyframes(TrackId(1), "cube", [cube.clone()]).unwrap());

    let rect = infer_rect(&cube, &project.rig, CameraKind::Rgb).unwrap();
    let frame = project.load_rgb(0).unwrap();
    let trimap = init_trimap(rect, W as usize, H as usize, default_padding(&rect), Modality::Rgb).unwrap();
    // A background stroke across the top of the padding ring.
    let strokes = ScribbleSet {
        strokes: vec![Stroke { points: vec![[0.0, 1.0], [trimap.width() as f64 - 1.0, 1.0]], radius: 1.0, label: ScribbleLabel::Background }],
    };
    let trimap = apply_scribbles(&trimap, &strokes);
    let res = grabcut_iterate(&crop_image(&frame, &trimap.crop), &trimap, None, 5, &GrabCutParams::default()).unwrap();
    let mask = trimap.to_frame_mask(&res.mask, W as usize, H as usize);
    project
        .masks
        .insert(InstanceMask { instance_id: 1, frame_index: 0, modality: Modality::Rgb, mask })
        .unwrap();
    project.save().unwrap();

    let loaded = AnnotationProject::load(dir.path()).unwrap();
    assert_eq!(loaded, project);
    let user = loaded.annotation_set().unwrap();
    let reference = AnnotationSet {
        boxes: vec![cube],
        masks: vec![InstanceMask { instance_id: 1, frame_index: 0, modality: Modality::Rgb, mask: truth }],
    };
    let eval = evaluate_dataset(&user, &reference).unwrap();
    let m = eval.masks.unwrap();
    assert!(m.iou > 0.95, "{m:?}");
    assert_eq!(eval.boxes.unwrap().ate, 0.0);

    let csv = export_annotations(&loaded, ExportFormat::FlatPerFrame).unwrap();
    let text = std::fs::read_to_string(&csv[0]).unwrap();
    assert!(text.lines().nth(1).unwrap().ends_with(",easy"), "{text}");
}
