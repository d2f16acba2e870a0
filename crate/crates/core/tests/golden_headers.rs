use aps_core::adapt::TRACE_CSV_HEADER;
use aps_core::estimate::ELEMENT_CSV_HEADER;
use aps_core::experiments::{
    run_conditioning, run_uniform_table, write_conditioning_csv, write_table_csv, ExperimentConfig,
    ADAPT_CSV_HEADER, CONDITIONING_CSV_HEADER, TABLE_CSV_HEADER,
};
use aps_core::mesh::io::HEADER;

#[test]
fn documented_schemas() {
    assert_eq!(TABLE_CSV_HEADER, "block,h1,h2,nv,ei_zz,ei_a,ei_sa,err,status");
    assert_eq!(CONDITIONING_CSV_HEADER, "eps,h,nv,p_condition,p_err,aps_err,aps_residual,status");
    assert_eq!(
        ADAPT_CSV_HEADER,
        "tol,indicator,iterations,converged,nv,nt,ratio,err,aspect_max,aspect_avg,ei_zz,ei_a,ei_sa"
    );
    assert_eq!(TRACE_CSV_HEADER, "iteration,nv,nt,ratio,err,aspect_max,aspect_avg,ei_zz,ei_a,ei_sa,in_band");
    assert_eq!(ELEMENT_CSV_HEADER, "element,eta_full,eta_simpl,rho_phi,rho_q,lambda1,lambda2,aspect");
    assert_eq!(HEADER, "aniso-mesh v1");
}

fn columns_match(text: &str) {
    let mut lines = text.lines();
    let n = lines.next().unwrap().split(',').count();
    for l in lines {
        assert_eq!(l.split(',').count(), n, "row `{l}`");
    }
}

#[test]
fn written_rows_match_their_header() {
    let mut cfg = ExperimentConfig {
        levels: Some(2),
        ..ExperimentConfig::default()
    };
    let mut buf = Vec::new();
    write_table_csv(&run_uniform_table(&cfg).unwrap(), &mut buf).unwrap();
    columns_match(&String::from_utf8(buf).unwrap());

    cfg.nx = 5;
    let mut buf = Vec::new();
    write_conditioning_csv(&run_conditioning(&cfg).unwrap(), &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().count(), 7);
    columns_match(&text);
}
