import requests

BASE_URL = 'http://127.0.0.1:8000/api/runs'

print("Testing API Endpoints...")
print("=" * 50)

# Test 1: Index
print("\n1. Testing GET /api/")
resp = requests.get("http://127.0.0.1:8000/api/")
print(f"Status: {resp.status_code}")
if resp.status_code == 200:
    for experiment in resp.json().get('experiments', []):
        print(f"  {experiment['command']}: {experiment['description']}")

# Test 2: Launch a cheap Ornstein-Uhlenbeck check on the linear path
print("\n2. Testing POST /api/runs/launch/")
launch_resp = requests.post(f"{BASE_URL}/launch/", json={
    'command': 'ou_check',
    'config': 'path_kind = linear\n',
    'seed': 1,
})
print(f"Status: {launch_resp.status_code}")
run = launch_resp.json()
print(f"Run #{run.get('id')}: {run.get('status')} in {run.get('duration_seconds', 0):.2f}s")

# Test 3: A config error is reported with its line and field
print("\n3. Testing POST /api/runs/launch/ with a broken config")
bad_resp = requests.post(f"{BASE_URL}/launch/", json={'command': 'ou_check', 'config': 'h = -1\n'})
print(f"Status: {bad_resp.status_code}")
print(f"Response: {bad_resp.json()}")

# Test 4: Detail and table of the stored run
if launch_resp.status_code == 201:
    run_id = run['id']
    print(f"\n4. Testing GET /api/runs/{run_id}/")
    detail = requests.get(f"{BASE_URL}/{run_id}/")
    print(f"Status: {detail.status_code}")
    for check in detail.json()['report'].get('checks', []):
        print(f"  {check['check']}: {check['value']} ({'ok' if check['passed'] else 'FAILED'})")

    print(f"\n5. Testing GET /api/runs/{run_id}/table/")
    table = requests.get(f"{BASE_URL}/{run_id}/table/")
    print(f"Status: {table.status_code}")
    print(table.text.splitlines()[0])

# Test 6: List
print("\n6. Testing GET /api/runs/?command=ou_check")
list_resp = requests.get(f"{BASE_URL}/?command=ou_check&limit=5")
print(f"Status: {list_resp.status_code}")
print(f"Found {len(list_resp.json().get('runs', []))} runs")

print("\n" + "=" * 50)
print("API Test Complete!")
