import time

# Never answers: reads nothing, writes nothing.
while True:
    time.sleep(3600)
