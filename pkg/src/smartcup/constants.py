"""Physical and hardware constants of the four-chamber cup rig."""

P_ATM = 101_325.0            # Pa
MAX_VACUUM = 85_000.0        # Pa, vacuum generator limit
R_AIR = 287.05               # J/(kg K)
T_GAS = 293.15               # K, isothermal

SENSOR_RATE = 166.7          # Hz, I2C polling of the four transducers
SENSOR_RESOLUTION = 0.01     # Pa/count
SENSOR_NOISE_RMS = 5.0       # Pa
FT_RATE = 150.0              # Hz, wrist load cell

VALVE_T_ON = 3.5e-3          # s
VALVE_T_OFF = 2.0e-3         # s
PWM_FREQ = 30.0              # Hz
PWM_DUTY = 0.30

DT = 1e-4                    # s, integrator step
SAMPLE_MS = 6.0              # nominal sample period used for time-error reporting

N_CHAMBERS = 4
# chamber centre azimuths (deg) in the cup frame; 1,2 on the -x ("left") side
CHAMBER_AZIMUTH = (135.0, 225.0, 315.0, 45.0)
LEFT = (0, 1)
RIGHT = (2, 3)
