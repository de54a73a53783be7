//! Start a server on an ephemeral port, then fetch the same tile through the
//! native and the DICOMweb routes and compare the bytes.

use iris_core::encoder::{build_pyramid, EncodeJob, Source};
use iris_core::schema::SlideMetadataDoc;
use iris_core::server::{Server, ServerConfig};

#[tokio::main(flavor = "current_thread")]
async fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    build_pyramid(&EncodeJob::new(
        Source::Synthetic { width: 1200, height: 900, seed: 3 },
        dir.path().join("demo.iris"),
    ))?;
    let server = tokio::task::spawn_blocking({
        let dir = dir.path().to_path_buf();
        move || Server::start(ServerConfig::local(dir))
    })
    .await??;
    let base = server.base_url();
    let http = reqwest::Client::new();

    let meta: SlideMetadataDoc =
        serde_json::from_slice(&http.get(format!("{base}/slides/demo/metadata")).send().await?.bytes().await?)?;
    println!("{} layers, top grid {}x{}", meta.layers.len(),
        meta.layers.last().unwrap().x_tiles, meta.layers.last().unwrap().y_tiles);

    let layer = meta.layers.len() - 1;
    let native = http
        .get(format!("{base}/slides/demo/layers/{layer}/tiles/5"))
        .send()
        .await?;
    println!("native   {} {:?}", native.status(), native.headers().get("content-type"));
    let native = native.bytes().await?;

    // Frames are 1-based.
    let wado = http
        .get(format!("{base}/studies/demo/series/demo/instances/{layer}/frames/6"))
        .send()
        .await?
        .bytes()
        .await?;
    println!("dicomweb {} bytes, identical: {}", wado.len(), wado == native);

    let series = http
        .get(format!("{base}/studies/demo/series/demo/metadata"))
        .send()
        .await?
        .text()
        .await?;
    println!("series metadata: {} bytes of DICOM JSON", series.len());

    tokio::task::spawn_blocking(move || server.shutdown()).await?;
    Ok(())
}
