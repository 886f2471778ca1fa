"""The two timestamp-matching policies on crafted streams.

Exact matching triggers only on identical stamps; approximate matching admits
a bounded stamp spread and picks the minimal-spread candidate set.
"""

from dagrt import MatchKind, StampedMessage, Synchronizer, SyncPolicy, ms


def feed(sync, topic, stamp_ms, tag):
    got = sync.offer(StampedMessage(topic, ms(stamp_ms), tag, ms(stamp_ms), 0))
    arrow = " -> " + (
        "no match" if got is None else
        "matched " + ", ".join(f"{m.topic}@{m.stamp / 1e6:.0f}ms({m.payload})"
                               for m in got))
    print(f"  {topic}@{stamp_ms}ms ({tag}){arrow}")


def main():
    print("exact matching (identical stamps only):")
    sync = Synchronizer(["cam", "lidar"], SyncPolicy(MatchKind.EXACT))
    feed(sync, "cam", 100, "c0")
    feed(sync, "lidar", 101, "l0")   # off by 1ms: never matches
    feed(sync, "lidar", 100, "l1")   # same stamp as c0: fires
    print(f"  leftovers purged below the match: {sync.purged}")

    print("\napproximate matching (max spread 10ms, minimal-spread set):")
    sync = Synchronizer(["cam", "lidar"],
                        SyncPolicy(MatchKind.APPROXIMATE, max_interval_ns=ms(10)))
    feed(sync, "cam", 100, "c0")
    feed(sync, "lidar", 115, "l0")   # spread 15ms: too far apart
    feed(sync, "cam", 112, "c1")     # spread 3ms vs l0: fires with c1, not c0
    print(f"  stale cam@100 purged: {sync.purged}")

    print("\nthe same arrivals under a 20ms tolerance:")
    sync = Synchronizer(["cam", "lidar"],
                        SyncPolicy(MatchKind.APPROXIMATE, max_interval_ns=ms(20)))
    feed(sync, "cam", 100, "c0")
    feed(sync, "lidar", 115, "l0")   # spread 15ms: now acceptable


if __name__ == "__main__":
    main()
