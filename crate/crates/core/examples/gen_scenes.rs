//! Writes the bundled scene meshes into a directory (default `scenes`).

use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;

use hybrid_sdf::geometry::{shapes, write_obj, DVec3, TriangleMesh};

fn main() -> std::io::Result<()> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "scenes".into()));
    std::fs::create_dir_all(&dir)?;
    let meshes: [(&str, TriangleMesh); 4] = [
        ("icosphere.obj", shapes::icosphere(3, 1.0)),
        (
            "ground.obj",
            shapes::quad(DVec3::ZERO, DVec3::new(2.0, 0.0, 0.0), DVec3::new(0.0, 0.0, -2.0)),
        ),
        ("box.obj", shapes::cuboid(DVec3::splat(-0.4), DVec3::splat(0.4))),
        // zero-thickness wall standing on the ground, facing +x
        (
            "thin_quad.obj",
            shapes::quad(
                DVec3::new(0.0, 0.3, 0.0),
                DVec3::new(0.0, 0.0, -0.8),
                DVec3::new(0.0, 0.3, 0.0),
            ),
        ),
    ];
    for (name, mesh) in &meshes {
        let path = dir.join(name);
        write_obj(mesh, BufWriter::new(File::create(&path)?))?;
        println!("{} ({} triangles)", path.display(), mesh.len());
    }
    Ok(())
}
