import concurrent.futures

import requests

BASE_URL = 'http://127.0.0.1:8000/api/runs'
CONFIG = 'paths = 500\n'


def launch(index, seed):
    resp = requests.post(f"{BASE_URL}/launch/", json={'command': 'ou_check', 'config': CONFIG, 'seed': seed})
    if resp.status_code != 201:
        return index, None, f"Launch failed - {resp.json().get('error')}"
    run = resp.json()
    checks = {c['check']: c['value'] for c in run['report'].get('checks', [])}
    return index, checks, run['status']


def run_reproducibility_check(seed=7, launches=6):
    print(f"Launching {launches} simultaneous ou_check runs with seed {seed}...")

    results = []
    with concurrent.futures.ThreadPoolExecutor(max_workers=launches) as executor:
        futures = [executor.submit(launch, i, seed) for i in range(launches)]
        for future in concurrent.futures.as_completed(futures):
            results.append(future.result())

    for index, checks, status in sorted(results, key=lambda r: r[0]):
        variance = checks.get('ensemble_variance') if checks else None
        print(f"Run {index}: {status}, ensemble variance {variance}")

    reports = [checks for _, checks, _ in results if checks is not None]
    distinct = {tuple(sorted((k, repr(v)) for k, v in checks.items())) for checks in reports}

    print("\n" + "=" * 30)
    print("REPRODUCIBILITY RESULTS")
    print("=" * 30)
    print(f"Completed runs:   {len(reports)}")
    print(f"Distinct reports: {len(distinct)}")
    print("=" * 30)

    if len(reports) == launches and len(distinct) == 1:
        print("VERIFIED: concurrent runs with one seed produced identical reports!")
    else:
        print(f"WARNING: expected {launches} identical reports.")


if __name__ == "__main__":
    run_reproducibility_check()
