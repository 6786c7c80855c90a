//! Weak labels from one annotated image, then a training batch augmented
//! with them.
//!
//! cargo run -p iisa --example weak_labels

use iisa::iis::{augment_batch, extrapolate_iis, generate_weak_labels, IntrinsicScale, WeakLabelConfig};
use iisa::resample::Image;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = WeakLabelConfig::with_seed(2024);
    let img = Image::filled("sky", 320, 240, 3, 180)?;

    // Label arithmetic: an image that looks best at 40% is at its best
    // scale once downscaled below 0.4, and at 0.4/0.8 = 0.5 after a 0.8 shrink.
    let omega = IntrinsicScale::new(0.4)?;
    for s in [0.3, 0.4, 0.8, 1.0] {
        println!("omega 0.4 downscaled by {s}: {}", extrapolate_iis(omega, s)?.value());
    }

    for sample in generate_weak_labels(&img, omega, &cfg)? {
        let l = &sample.label;
        println!(
            "{} scale {:.4} -> weak IIS {:.4} ({}x{})",
            l.output_image_ref,
            l.sampled_scale,
            l.weak_iis,
            sample.image.width(),
            sample.image.height()
        );
    }

    let batch = vec![
        (img.clone(), omega),
        (Image::filled("wall", 200, 200, 1, 90)?, IntrinsicScale::new(0.9)?),
    ];
    let augmented = augment_batch(&batch, &cfg, 0)?;
    println!("batch of {} grew to {}", batch.len(), augmented.len());
    for s in &augmented {
        println!("  {:<16} iis {:.4} weak={}", s.image.id(), s.iis, s.weak);
    }
    Ok(())
}
