#!/usr/bin/env python3
"""Convert the raw Adult Income and COMPAS files into the CSV layout read by
`cfextract`.

Usage: prepare_data.py RAW_DIR OUT_DIR

RAW_DIR must contain `adult.data`, `adult.test` (UCI format) and
`compas-scores-two-years.csv` (ProPublica). Copies of all three ship in the
`responsibly` wheel on PyPI under `responsibly/dataset/`.

Default Credit (UCI "default of credit card clients") is read as-is from a CSV
with the UCI column names; pass it with `--default-credit PATH` if available.
"""
import argparse
import csv
import os

ADULT_COLUMNS = [
    "age", "workclass", "fnlwgt", "education", "education_num", "marital_status",
    "occupation", "relationship", "race", "gender", "capital_gain", "capital_loss",
    "hours_per_week", "native_country", "income",
]

WORKCLASS = {
    "Federal-gov": "Government", "Local-gov": "Government", "State-gov": "Government",
    "Private": "Private",
    "Self-emp-inc": "Self-Employed", "Self-emp-not-inc": "Self-Employed",
    "Never-worked": "Other/Unknown", "Without-pay": "Other/Unknown", "?": "Other/Unknown",
}
MARITAL = {
    "Married-AF-spouse": "Married", "Married-civ-spouse": "Married",
    "Married-spouse-absent": "Married", "Never-married": "Single",
    "Divorced": "Divorced", "Separated": "Separated", "Widowed": "Widowed",
}
OCCUPATION = {
    "Adm-clerical": "White-Collar", "Exec-managerial": "White-Collar",
    "Craft-repair": "Blue-Collar", "Farming-fishing": "Blue-Collar",
    "Handlers-cleaners": "Blue-Collar", "Machine-op-inspct": "Blue-Collar",
    "Transport-moving": "Blue-Collar",
    "Other-service": "Service", "Priv-house-serv": "Service",
    "Protective-serv": "Service", "Armed-Forces": "Service",
    "Prof-specialty": "Professional", "Tech-support": "Professional",
    "Sales": "Sales", "?": "Other/Unknown",
}

ADULT_OUT = [
    "age", "workclass", "education", "marital_status", "relationship", "occupation",
    "race", "gender", "capital_gain", "capital_loss", "hours_per_week", "income",
]

COMPAS_OUT = [
    "sex", "age", "race", "juv_fel_count", "juv_misd_count", "juv_other_count",
    "priors_count", "c_charge_degree", "two_year_recid",
]


def adult_rows(path):
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("|"):
                continue
            values = [v.strip() for v in line.split(",")]
            row = dict(zip(ADULT_COLUMNS, values))
            row["income"] = row["income"].rstrip(".")
            row["workclass"] = WORKCLASS[row["workclass"]]
            row["marital_status"] = MARITAL[row["marital_status"]]
            row["occupation"] = OCCUPATION[row["occupation"]]
            yield [row[c] for c in ADULT_OUT]


def write(path, header, rows):
    n = 0
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow(r)
            n += 1
    print(f"{path}: {n} rows")


def compas_rows(path):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        # the ProPublica file repeats `priors_count` and `decile_score`; keep the first
        index = {}
        for i, name in enumerate(header):
            index.setdefault(name, i)
        for rec in reader:
            yield [rec[index[c]] for c in COMPAS_OUT]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("raw_dir")
    ap.add_argument("out_dir")
    ap.add_argument("--default-credit")
    args = ap.parse_args()
    os.makedirs(args.out_dir, exist_ok=True)

    adult = list(adult_rows(os.path.join(args.raw_dir, "adult.data")))
    adult += list(adult_rows(os.path.join(args.raw_dir, "adult.test")))
    write(os.path.join(args.out_dir, "adult.csv"), ADULT_OUT, adult)

    write(
        os.path.join(args.out_dir, "compas.csv"),
        COMPAS_OUT,
        compas_rows(os.path.join(args.raw_dir, "compas-scores-two-years.csv")),
    )

    if args.default_credit:
        with open(args.default_credit, newline="") as fh:
            reader = csv.reader(fh)
            header = [h.strip() for h in next(reader)]
            keep = [i for i, h in enumerate(header) if h != "ID"]
            rows = ([rec[i].strip() for i in keep] for rec in reader)
            write(os.path.join(args.out_dir, "default_credit.csv"),
                  [header[i] for i in keep], rows)


if __name__ == "__main__":
    main()
