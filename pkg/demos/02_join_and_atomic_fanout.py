"""Drive the channel layer directly: AND-join assembly and atomic emission.

A join gate hands over one aligned tuple per job index, becoming ready the
instant the last input for that index arrives. A fanout releases all outputs
of a completion together, sharing one publish time.
"""

from dagrt import Fanout, JoinGate, Message, ms


def main():
    gate = JoinGate(["left", "right"])
    fanout = Fanout(["left", "right"],
                    {"left": [gate.queues["left"]],
                     "right": [gate.queues["right"]]})

    # a completion at t=40ms emits both outputs at once
    fanout.send_all(("L0", "R0"), job=0, publish_time=ms(40))
    payloads, job, ready = gate.pop_tuple()
    print(f"job {job}: payloads={payloads}, ready at {ready / 1e6:.0f}ms")

    # inputs for the next index arrive out of order and at different times;
    # the gate is ready only at the latest arrival
    gate.push("right", Message("right", 1, ms(50), "R1", ms(50)), ms(50))
    print("gate ready with only one input?", gate.ready())
    gate.push("left", Message("left", 1, ms(58), "L1", ms(58)), ms(58))
    payloads, job, ready = gate.pop_tuple()
    print(f"job {job}: payloads={payloads}, ready at {ready / 1e6:.0f}ms "
          "(= the later arrival)")

    # indices never mix: the tuple for job 2 waits for *job 2* on both inputs,
    # even if job 3 shows up first on one of them
    gate.push("left", Message("left", 2, ms(60), "L2", ms(60)), ms(60))
    gate.push("right", Message("right", 2, ms(75), "R2", ms(75)), ms(75))
    gate.push("left", Message("left", 3, ms(61), "L3", ms(61)), ms(61))
    payloads, job, _ = gate.pop_tuple()
    print(f"job {job}: payloads={payloads} (job-3 input queued, not mixed in)")


if __name__ == "__main__":
    main()
