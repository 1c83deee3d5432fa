/** Dashboard fixture captured from the backend's own pipeline: the seeded
 * location-history generator parsed and summarized by the report builder
 * (telecare.generators.generate_d4 seeds 2611 and 2607 through
 * telecare.mobility.build_report), wrapped the way the dashboard endpoint
 * wraps parts for the coordinator. Regenerate by re-running those two
 * functions if the report format changes.
 */

import { Parts } from "../src/api";

export const DASHBOARD_FIXTURE: Parts = {
  "parts": [
    {
      "type": "subject_profile",
      "fields": {
        "pid": "abababababababababababababababababababababababababababababababababababab",
        "alias": "Quercia",
        "age_band": "70-79",
        "gender_group": "f",
        "notes": ""
      }
    },
    {
      "type": "analysis_results",
      "fields": {
        "pid": "abababababababababababababababababababababababababababababababababababab",
        "summary": "outside time steady; one slow route flagged for review",
        "generated_at": "2025-03-03T00:00:00+00:00"
      }
    },
    {
      "type": "mobility_report",
      "fields": {
        "pid": "abababababababababababababababababababababababababababababababababababab",
        "window": {
          "start": "2025-01-06",
          "end": "2025-02-05"
        },
        "daily_outside": [
          {
            "date": "2025-01-06",
            "minutes_outside": 28,
            "outing_count": 1
          },
          {
            "date": "2025-01-07",
            "minutes_outside": 24,
            "outing_count": 1
          },
          {
            "date": "2025-01-08",
            "minutes_outside": 25,
            "outing_count": 1
          },
          {
            "date": "2025-01-09",
            "minutes_outside": 27,
            "outing_count": 1
          },
          {
            "date": "2025-01-10",
            "minutes_outside": 25,
            "outing_count": 1
          },
          {
            "date": "2025-01-11",
            "minutes_outside": 27,
            "outing_count": 1
          },
          {
            "date": "2025-01-12",
            "minutes_outside": 26,
            "outing_count": 1
          },
          {
            "date": "2025-01-13",
            "minutes_outside": 26,
            "outing_count": 1
          },
          {
            "date": "2025-01-14",
            "minutes_outside": 23,
            "outing_count": 1
          },
          {
            "date": "2025-01-15",
            "minutes_outside": 0,
            "outing_count": 0
          },
          {
            "date": "2025-01-16",
            "minutes_outside": 23,
            "outing_count": 1
          },
          {
            "date": "2025-01-17",
            "minutes_outside": 24,
            "outing_count": 1
          },
          {
            "date": "2025-01-18",
            "minutes_outside": 26,
            "outing_count": 1
          },
          {
            "date": "2025-01-19",
            "minutes_outside": 25,
            "outing_count": 1
          },
          {
            "date": "2025-01-20",
            "minutes_outside": 30,
            "outing_count": 1
          },
          {
            "date": "2025-01-21",
            "minutes_outside": 24,
            "outing_count": 1
          },
          {
            "date": "2025-01-22",
            "minutes_outside": 25,
            "outing_count": 1
          },
          {
            "date": "2025-01-23",
            "minutes_outside": 27,
            "outing_count": 1
          },
          {
            "date": "2025-01-24",
            "minutes_outside": 24,
            "outing_count": 1
          },
          {
            "date": "2025-01-25",
            "minutes_outside": 27,
            "outing_count": 1
          },
          {
            "date": "2025-01-26",
            "minutes_outside": 30,
            "outing_count": 1
          },
          {
            "date": "2025-01-27",
            "minutes_outside": 28,
            "outing_count": 1
          },
          {
            "date": "2025-01-28",
            "minutes_outside": 22,
            "outing_count": 1
          },
          {
            "date": "2025-01-29",
            "minutes_outside": 28,
            "outing_count": 1
          },
          {
            "date": "2025-01-30",
            "minutes_outside": 0,
            "outing_count": 0
          },
          {
            "date": "2025-01-31",
            "minutes_outside": 0,
            "outing_count": 0
          },
          {
            "date": "2025-02-01",
            "minutes_outside": 29,
            "outing_count": 1
          },
          {
            "date": "2025-02-02",
            "minutes_outside": 30,
            "outing_count": 1
          },
          {
            "date": "2025-02-03",
            "minutes_outside": 0,
            "outing_count": 0
          },
          {
            "date": "2025-02-04",
            "minutes_outside": 24,
            "outing_count": 1
          }
        ],
        "place_changes": {
          "jaccard_distance": 0.0,
          "appeared": 0,
          "disappeared": 0
        },
        "route_deviations": [
          {
            "place": 1,
            "date": "2025-01-06",
            "duration_ratio": 1.1,
            "flagged": false
          },
          {
            "place": 1,
            "date": "2025-01-07",
            "duration_ratio": 0.9,
            "flagged": false
          },
          {
            "place": 1,
            "date": "2025-01-08",
            "duration_ratio": 1.0,
            "flagged": false
          },
          {
            "place": 1,
            "date": "2025-01-09",
            "duration_ratio": 0.9,
            "flagged": false
          },
          {
            "place": 1,
            "date": "2025-01-10",
            "duration_ratio": 1.1,
            "flagged": false
          },
          {
            "place": 1,
            "date": "2025-01-11",
            "duration_ratio": 1.1,
            "flagged": false
          },
          {
            "place": 1,
            "date": "2025-01-12",
            "duration_ratio": 1.0,
            "flagged": false
          },
          {
            "place": 1,
            "date": "2025-01-13",
            "duration_ratio": 1.0,
            "flagged": false
          },
          {
            "place": 1,
            "date": "2025-01-14",
            "duration_ratio": 0.9,
            "flagged": false
          },
          {
            "place": 1,
            "date": "2025-01-16",
            "duration_ratio": 0.9,
            "flagged": false
          },
          {
            "place": 1,
            "date": "2025-01-17",
            "duration_ratio": 1.1,
            "flagged": false
          },
          {
            "place": 1,
            "date": "2025-01-18",
            "duration_ratio": 0.9,
            "flagged": false
          },
          {
            "place": 1,
            "date": "2025-01-19",
            "duration_ratio": 1.1,
            "flagged": false
          },
          {
            "place": 1,
            "date": "2025-01-20",
            "duration_ratio": 1.0,
            "flagged": false
          },
          {
            "place": 1,
            "date": "2025-01-21",
            "duration_ratio": 0.9,
            "flagged": false
          },
          {
            "place": 1,
            "date": "2025-01-22",
            "duration_ratio": 0.9,
            "flagged": false
          },
          {
            "place": 1,
            "date": "2025-01-23",
            "duration_ratio": 0.9,
            "flagged": false
          },
          {
            "place": 1,
            "date": "2025-01-24",
            "duration_ratio": 1.0,
            "flagged": false
          },
          {
            "place": 1,
            "date": "2025-01-25",
            "duration_ratio": 1.1,
            "flagged": false
          },
          {
            "place": 1,
            "date": "2025-01-26",
            "duration_ratio": 1.1,
            "flagged": false
          },
          {
            "place": 1,
            "date": "2025-01-27",
            "duration_ratio": 1.0,
            "flagged": false
          },
          {
            "place": 1,
            "date": "2025-01-28",
            "duration_ratio": 0.9,
            "flagged": false
          },
          {
            "place": 1,
            "date": "2025-01-29",
            "duration_ratio": 0.9,
            "flagged": false
          },
          {
            "place": 1,
            "date": "2025-02-01",
            "duration_ratio": 1.0,
            "flagged": false
          },
          {
            "place": 1,
            "date": "2025-02-02",
            "duration_ratio": 1.7,
            "flagged": true
          },
          {
            "place": 1,
            "date": "2025-02-04",
            "duration_ratio": 0.9,
            "flagged": false
          }
        ],
        "wandering_episodes": []
      }
    },
    {
      "type": "mobility_report",
      "fields": {
        "pid": "abababababababababababababababababababababababababababababababababababab",
        "window": {
          "start": "2025-01-06",
          "end": "2025-02-05"
        },
        "daily_outside": [
          {
            "date": "2025-01-06",
            "minutes_outside": 23,
            "outing_count": 1
          },
          {
            "date": "2025-01-07",
            "minutes_outside": 26,
            "outing_count": 1
          },
          {
            "date": "2025-01-08",
            "minutes_outside": 24,
            "outing_count": 1
          },
          {
            "date": "2025-01-09",
            "minutes_outside": 26,
            "outing_count": 1
          },
          {
            "date": "2025-01-10",
            "minutes_outside": 27,
            "outing_count": 1
          },
          {
            "date": "2025-01-11",
            "minutes_outside": 69,
            "outing_count": 2
          },
          {
            "date": "2025-01-12",
            "minutes_outside": 26,
            "outing_count": 1
          },
          {
            "date": "2025-01-13",
            "minutes_outside": 23,
            "outing_count": 1
          },
          {
            "date": "2025-01-14",
            "minutes_outside": 25,
            "outing_count": 1
          },
          {
            "date": "2025-01-15",
            "minutes_outside": 23,
            "outing_count": 1
          },
          {
            "date": "2025-01-16",
            "minutes_outside": 0,
            "outing_count": 0
          },
          {
            "date": "2025-01-17",
            "minutes_outside": 27,
            "outing_count": 1
          },
          {
            "date": "2025-01-18",
            "minutes_outside": 28,
            "outing_count": 1
          },
          {
            "date": "2025-01-19",
            "minutes_outside": 0,
            "outing_count": 0
          },
          {
            "date": "2025-01-20",
            "minutes_outside": 24,
            "outing_count": 1
          },
          {
            "date": "2025-01-21",
            "minutes_outside": 26,
            "outing_count": 1
          },
          {
            "date": "2025-01-22",
            "minutes_outside": 26,
            "outing_count": 1
          },
          {
            "date": "2025-01-23",
            "minutes_outside": 22,
            "outing_count": 1
          },
          {
            "date": "2025-01-24",
            "minutes_outside": 22,
            "outing_count": 1
          },
          {
            "date": "2025-01-25",
            "minutes_outside": 26,
            "outing_count": 1
          },
          {
            "date": "2025-01-26",
            "minutes_outside": 24,
            "outing_count": 1
          },
          {
            "date": "2025-01-27",
            "minutes_outside": 25,
            "outing_count": 1
          },
          {
            "date": "2025-01-28",
            "minutes_outside": 23,
            "outing_count": 1
          },
          {
            "date": "2025-01-29",
            "minutes_outside": 25,
            "outing_count": 1
          },
          {
            "date": "2025-01-30",
            "minutes_outside": 69,
            "outing_count": 2
          },
          {
            "date": "2025-01-31",
            "minutes_outside": 0,
            "outing_count": 0
          },
          {
            "date": "2025-02-01",
            "minutes_outside": 28,
            "outing_count": 1
          },
          {
            "date": "2025-02-02",
            "minutes_outside": 0,
            "outing_count": 0
          },
          {
            "date": "2025-02-03",
            "minutes_outside": 24,
            "outing_count": 1
          },
          {
            "date": "2025-02-04",
            "minutes_outside": 25,
            "outing_count": 1
          }
        ],
        "place_changes": {
          "jaccard_distance": 0.0,
          "appeared": 0,
          "disappeared": 0
        },
        "route_deviations": [
          {
            "place": 1,
            "date": "2025-01-06",
            "duration_ratio": 1.0,
            "flagged": false
          },
          {
            "place": 1,
            "date": "2025-01-08",
            "duration_ratio": 1.0,
            "flagged": false
          },
          {
            "place": 1,
            "date": "2025-01-10",
            "duration_ratio": 0.8889,
            "flagged": false
          },
          {
            "place": 1,
            "date": "2025-01-12",
            "duration_ratio": 0.8889,
            "flagged": false
          },
          {
            "place": 1,
            "date": "2025-01-14",
            "duration_ratio": 1.0,
            "flagged": false
          },
          {
            "place": 1,
            "date": "2025-01-18",
            "duration_ratio": 1.0,
            "flagged": false
          },
          {
            "place": 1,
            "date": "2025-01-20",
            "duration_ratio": 0.8889,
            "flagged": false
          },
          {
            "place": 1,
            "date": "2025-01-21",
            "duration_ratio": 0.8889,
            "flagged": false
          },
          {
            "place": 1,
            "date": "2025-01-23",
            "duration_ratio": 1.0,
            "flagged": false
          },
          {
            "place": 1,
            "date": "2025-01-25",
            "duration_ratio": 1.0,
            "flagged": false
          },
          {
            "place": 1,
            "date": "2025-01-27",
            "duration_ratio": 1.0,
            "flagged": false
          },
          {
            "place": 1,
            "date": "2025-01-29",
            "duration_ratio": 1.0,
            "flagged": false
          },
          {
            "place": 1,
            "date": "2025-02-04",
            "duration_ratio": 1.1111,
            "flagged": false
          },
          {
            "place": 2,
            "date": "2025-01-07",
            "duration_ratio": 1.0,
            "flagged": false
          },
          {
            "place": 2,
            "date": "2025-01-09",
            "duration_ratio": 1.0,
            "flagged": false
          },
          {
            "place": 2,
            "date": "2025-01-11",
            "duration_ratio": 1.0,
            "flagged": false
          },
          {
            "place": 2,
            "date": "2025-01-13",
            "duration_ratio": 0.8889,
            "flagged": false
          },
          {
            "place": 2,
            "date": "2025-01-15",
            "duration_ratio": 0.8889,
            "flagged": false
          },
          {
            "place": 2,
            "date": "2025-01-17",
            "duration_ratio": 1.0,
            "flagged": false
          },
          {
            "place": 2,
            "date": "2025-01-22",
            "duration_ratio": 1.0,
            "flagged": false
          },
          {
            "place": 2,
            "date": "2025-01-24",
            "duration_ratio": 0.8889,
            "flagged": false
          },
          {
            "place": 2,
            "date": "2025-01-26",
            "duration_ratio": 1.0,
            "flagged": false
          },
          {
            "place": 2,
            "date": "2025-01-28",
            "duration_ratio": 1.0,
            "flagged": false
          },
          {
            "place": 2,
            "date": "2025-01-30",
            "duration_ratio": 1.0,
            "flagged": false
          },
          {
            "place": 2,
            "date": "2025-02-01",
            "duration_ratio": 1.0,
            "flagged": false
          },
          {
            "place": 2,
            "date": "2025-02-03",
            "duration_ratio": 1.1111,
            "flagged": false
          }
        ],
        "wandering_episodes": [
          {
            "date": "2025-01-11",
            "tortuosity": 20.0,
            "duration_minutes": 45.0
          },
          {
            "date": "2025-01-30",
            "tortuosity": 20.0,
            "duration_minutes": 45.0
          }
        ]
      }
    }
  ]
};
