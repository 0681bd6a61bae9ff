"""Walk through the delay components of a single offloading interval.

Uses the reference radio/compute constants: a 10 MHz cellular link at SNR 1e5,
a two-hop satellite path at 10/100 Mbps with 1000 km hops, 800 cycles/bit
tasks between 100 KB and 700 KB, and edge servers of 10-59 GHz.
"""

from orbit_mec import (
    ComputeParams,
    MigrationParams,
    TaskSpec,
    cellular_com_delay,
    cellular_rate,
    interval_delay,
    local_delay,
    mec_delay,
    migration_delay,
    satellite_com_delay,
)
from orbit_mec.delays import LOCAL_TARGET, make_target
from orbit_mec.scenario import reference_setup

scenario = reference_setup()
radio = scenario.radio
satellites = scenario.satellite_regions

print("== link budget ==")
print(f"cellular Shannon rate: {cellular_rate(radio) / 1e6:.1f} Mbit/s")

task = TaskSpec(upload_bits=3.2e6, result_bits=3.2e5)  # 400 KB up, 10% back
compute = ComputeParams(scenario.cycles_per_bit, local_cpu_hz=0.8e9, mec_cpu_hz=15e9)

print("\n== one 400 KB task, robot CPU 0.8 GHz, server 15 GHz ==")
print(f"local compute:        {local_delay(task, compute, LOCAL_TARGET) * 1e3:9.2f} ms")
cell = make_target(3)
print(f"cellular round trip:  {cellular_com_delay(task, radio, cell) * 1e3:9.2f} ms")
sat = make_target(9, satellites)
print(f"satellite round trip: {satellite_com_delay(task, radio, sat) * 1e3:9.2f} ms")
print(f"server compute:       {mec_delay(task, compute, cell) * 1e3:9.2f} ms")

print("\n== migration charges when the serving server changes ==")
mig = MigrationParams(migration_ratio=0.1, cross_tier_cost_s=0.5)
mec_s = mec_delay(task, compute, cell)
pairs = [
    ("stay on server 3", cell, cell),
    ("cellular 3 -> cellular 5", cell, make_target(5)),
    ("cellular 3 -> satellite 9", cell, sat),
    ("satellite 8 -> satellite 9", make_target(8, satellites), sat),
]
for label, prev, curr in pairs:
    print(f"{label:28s} {migration_delay(prev, curr, mec_s, mig) * 1e3:8.2f} ms")

print("\n== full interval breakdown (cellular region, channel available) ==")
bd = interval_delay(task, radio, compute, mig, prev=LOCAL_TARGET, target=cell,
                    region_tier="cellular", channel_available=1)
for name, value in zip(bd._fields, bd):
    print(f"  {name:8s} {value * 1e3:9.3f} ms")
print("\nOffloading beats the local bound by "
      f"{local_delay(task, compute, LOCAL_TARGET) / bd.total_s:.1f}x here.")
