//! Intersection-over-union of oriented rectangles as one is slid and spun
//! across the other.

use std::f64::consts::PI;

use pushcurl::geom::{circle_rect_contact, rect_iou, OrientedRect, Pose2D, Vec2};

fn main() {
    let goal = OrientedRect::new(Pose2D::new(0.0, 0.0, 0.0), 0.04, 0.02).unwrap();

    println!("slide along x");
    for i in 0..=8 {
        let dx = 0.01 * i as f64;
        let block = goal.with_pose(Pose2D::new(dx, 0.0, 0.0));
        println!("  dx {dx:.2}  iou {:.4}", rect_iou(&block, &goal));
    }

    println!("spin about the centre");
    for i in 0..=4 {
        let th = PI / 8.0 * i as f64;
        let block = goal.with_pose(Pose2D::new(0.0, 0.0, th));
        println!("  theta {th:.3}  iou {:.4}", rect_iou(&block, &goal));
    }

    let c = circle_rect_contact(Vec2::new(0.0, 0.03), 0.015, &goal);
    println!(
        "effector at (0, 0.03): penetration {:.4}, clearance {:.4}, normal ({:.1}, {:.1})",
        c.penetration, c.clearance, c.push_normal.x, c.push_normal.y
    );
}
