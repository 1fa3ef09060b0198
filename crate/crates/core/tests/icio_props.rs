use ndarray::Array2;
use proptest::prelude::*;
use valuechain::icio::{
    binarize_ti, clean_icio, icio_labels, icio_specialization, industry_flows, trade_intensity,
    IcioCleaning, IcioTensor, LabelMatrix, PairCode,
};

const COUNTRIES: [&str; 6] = ["AUS", "CHN", "CN1", "MEX", "MX1", "ROW"];
const INDUSTRIES: [&str; 4] = ["01T02", "10T12", "29", "97T98"];

fn tensor() -> impl Strategy<Value = IcioTensor> {
    let labels: Vec<PairCode> = COUNTRIES
        .iter()
        .flat_map(|c| {
            INDUSTRIES.iter().map(move |i| PairCode {
                country: c.to_string(),
                industry: i.to_string(),
            })
        })
        .collect();
    let n = labels.len();
    prop::collection::vec(prop_oneof![Just(0u32), 1..1000u32], n * n).prop_map(move |v| {
        let data = Array2::from_shape_vec((n, n), v.into_iter().map(f64::from).collect()).unwrap();
        IcioTensor::square(labels.clone(), data).unwrap()
    })
}

fn square() -> impl Strategy<Value = Array2<f64>> {
    (2..9usize).prop_flat_map(|n| {
        prop::collection::vec(prop_oneof![Just(0u32), 1..100_000u32], n * n).prop_map(move |v| {
            let mut a =
                Array2::from_shape_vec((n, n), v.into_iter().map(f64::from).collect()).unwrap();
            a[[0, 1]] += 1.0;
            a
        })
    })
}

proptest! {
    #[test]
    fn cleaning_keeps_exact_books(raw in tensor()) {
        let (t, report) = clean_icio(&raw, &IcioCleaning::oecd_2021()).unwrap();
        prop_assert_eq!(report.input_total, raw.total());
        prop_assert_eq!(report.output_total, t.total());
        prop_assert_eq!(report.input_total, report.output_total + report.dropped_mass + report.domestic_mass);
        prop_assert_eq!(t.countries(), vec!["AUS".to_string(), "CHN".into(), "MEX".into()]);
        prop_assert_eq!(t.dim(), (9, 9));
        for (i, r) in t.rows().iter().enumerate() {
            for (j, c) in t.cols().iter().enumerate() {
                if r.country == c.country {
                    prop_assert_eq!(t.data()[[i, j]], 0.0);
                }
            }
        }
    }

    #[test]
    fn sector_table_totals(raw in tensor()) {
        let (t, _) = clean_icio(&raw, &IcioCleaning::oecd_2021()).unwrap();
        prop_assume!(t.total() > 0.0);
        let s = icio_specialization(&t).unwrap();
        let flows = industry_flows(&t).unwrap();
        prop_assert_eq!(s.total(valuechain::Direction::Export), t.total());
        prop_assert_eq!(flows.flows.sum(), t.total());
        let labels = icio_labels(&t).unwrap();
        prop_assert_eq!(labels.industries().len(), 3);
    }

    #[test]
    fn trade_intensity_row_identity(m in square()) {
        let ti = trade_intensity(&m).unwrap();
        let total = m.sum();
        let share: Vec<f64> = m.columns().into_iter().map(|c| c.sum() / total).collect();
        for (i, row) in ti.rows().into_iter().enumerate() {
            if m.row(i).sum() > 0.0 {
                let s: f64 = row.iter().zip(&share).map(|(a, b)| a * b).sum();
                prop_assert!((s - 1.0).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn labels_survive_rescaling(m in square(), c in prop::sample::select(vec![0.5, 2.0, 10.0, 1000.0])) {
        let names: Vec<String> = (0..m.nrows()).map(|i| format!("{i:02}")).collect();
        let a = binarize_ti(names.clone(), &trade_intensity(&m).unwrap()).unwrap();
        let b = binarize_ti(names, &trade_intensity(&m.mapv(|x| x * c)).unwrap()).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn label_csv_round_trip(m in square()) {
        let names: Vec<String> = (0..m.nrows()).map(|i| format!("{i:02}T{i:02}")).collect();
        let labels = binarize_ti(names, &trade_intensity(&m).unwrap()).unwrap();
        let mut buf = Vec::new();
        labels.write_csv(&mut buf).unwrap();
        prop_assert_eq!(LabelMatrix::read_csv(buf.as_slice()).unwrap(), labels);
    }
}

#[test]
fn year_files_are_summed_before_cleaning() {
    let csv = |v: u32| {
        format!(
            "V1,AUS_01,AUS_02,CHN_01,CHN_02,HFCE\nAUS_01,0,0,{v},0,9\nAUS_02,0,0,0,1,9\nCHN_01,2,0,0,0,9\nCHN_02,0,3,0,0,9\nVA,5,5,5,5,0\n"
        )
    };
    let years: Vec<IcioTensor> = [1, 2, 3]
        .iter()
        .map(|&v| IcioTensor::read_csv(csv(v).as_bytes()).unwrap())
        .collect();
    let sum = IcioTensor::sum(years).unwrap();
    assert_eq!(sum.dim(), (4, 4));
    assert_eq!(sum.data()[[0, 2]], 6.0);
    assert_eq!(sum.total(), 6.0 + 3.0 + 6.0 + 9.0);
    let (clean, report) = clean_icio(&sum, &IcioCleaning::oecd_2021()).unwrap();
    assert_eq!(clean.total(), 24.0);
    assert_eq!(report.unknown_codes.len(), 6);
}
