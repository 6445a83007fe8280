#!/usr/bin/env python3
# Copyright 2026 The mdeploy Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Writes the email-pipeline universe and node pool.

Loads are counted in units of 10K simultaneous requests. Each service
provides its own interface with capacity floor(max load / unit); the
ingress needs `--load` Traffic instances, each weak-requiring every
service once, so a service needs ceil(load / capacity) instances.
"""

import argparse
import json
import pathlib

UNIT = 10  # thousand requests

# name: (max load in K or None for unbounded, cpu millicores, ram MB,
#        downstream services reached through their load balancers)
SERVICES = {
    "MessageReceiver": (None, 500, 1000, ["MessageParser"]),
    "MessageParser": (40, 1000, 2000,
                      ["HeaderAnalyser", "LinkAnalyser", "TextAnalyser",
                       "AttachmentsManager"]),
    "HeaderAnalyser": (40, 500, 1000, ["MessageAnalyser"]),
    "LinkAnalyser": (40, 500, 1000, ["MessageAnalyser"]),
    "TextAnalyser": (15, 1000, 2000, ["SentimentAnalyser"]),
    "SentimentAnalyser": (15, 1500, 3000, ["MessageAnalyser"]),
    "AttachmentsManager": (30, 1000, 2000, ["VirusScanner", "ImageAnalyser"]),
    "VirusScanner": (13, 1500, 3000, ["MessageAnalyser"]),
    "ImageAnalyser": (30, 1000, 2000, ["NSFWDetector", "ImageRecognizer"]),
    "NSFWDetector": (13, 1000, 2000, ["MessageAnalyser"]),
    "ImageRecognizer": (13, 1500, 3000, ["MessageAnalyser"]),
    "MessageAnalyser": (70, 500, 1000, []),
}

BALANCER = {"cpu": 250, "ram": 250}
TRAFFIC = {"cpu": 250, "ram": 250}
INGRESS = {"cpu": 250, "ram": 250}

NODES = [
    {"name": "c4_large", "resources": {"cpu": 2000, "ram": 3750}, "cost": 100,
     "count": 40},
    {"name": "c4_xlarge", "resources": {"cpu": 4000, "ram": 7500}, "cost": 199,
     "count": 40},
    {"name": "c4_2xlarge", "resources": {"cpu": 8000, "ram": 15000},
     "cost": 398, "count": 40},
]


def universe(load_units):
    types = []
    for name, (max_load, cpu, ram, downstream) in SERVICES.items():
        capacity = "inf" if max_load is None else max_load // UNIT
        types.append({
            "name": name,
            "provides": {name: capacity, name + "_backend": "inf"},
            "strong": {d + "_lb": 1 for d in downstream},
            "resources": {"cpu": cpu, "ram": ram},
        })
        types.append({
            "name": name + "_LB",
            "provides": {name + "_lb": "inf"},
            "weak": {name + "_backend": 0},
            "resources": dict(BALANCER),
        })
    types.append({
        "name": "Traffic",
        "provides": {"traffic": 1},
        "weak": {name: 1 for name in SERVICES},
        "resources": dict(TRAFFIC),
    })
    types.append({
        "name": "EmailPipeline",
        "strong": {"MessageReceiver_lb": 1},
        "weak": {"traffic": load_units},
        "resources": dict(INGRESS),
    })
    return types


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--load", type=int, default=10,
                        help="simultaneous requests, in thousands")
    parser.add_argument("--out", default=str(pathlib.Path(__file__).parent))
    args = parser.parse_args()
    units = -(-args.load // UNIT)
    out = pathlib.Path(args.out)
    suffix = "" if args.load == 10 else "-%dk" % args.load
    (out / ("universe%s.json" % suffix)).write_text(
        json.dumps(universe(units), indent=2) + "\n")
    (out / "nodes.json").write_text(json.dumps(NODES, indent=2) + "\n")


if __name__ == "__main__":
    main()
